#include "ecbayes/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include "ecbayes/error.hpp"

namespace ecbayes {
namespace {

SufficientStats compute_stats(const std::vector<EnsembleRow>& rows) {
  std::vector<std::pair<double, double>> xy;
  xy.reserve(rows.size());
  for (const auto& r : rows) xy.emplace_back(r.x, r.y);
  std::sort(xy.begin(), xy.end());

  SufficientStats s;
  s.n = xy.size();
  const double n = static_cast<double>(s.n);
  for (const auto& [x, y] : xy) {
    s.mean_x += x;
    s.mean_y += y;
  }
  s.mean_x /= n;
  s.mean_y /= n;
  for (const auto& [x, y] : xy) {
    const double dx = x - s.mean_x;
    const double dy = y - s.mean_y;
    s.sxx += dx * dx;
    s.sxy += dx * dy;
    s.syy += dy * dy;
  }
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": unterminated quote");
  fields.emplace_back(trim(field));
  return fields;
}

double parse_number(const std::string& cell, const char* column, std::size_t line_no) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorKind::parse,
                "line " + std::to_string(line_no) + ": non-numeric " + column + " value '" + cell + "'");
  }
  return value;
}

}  // namespace

double SufficientStats::rss() const { return std::max(0.0, syy - sxy * sxy / sxx); }

double SufficientStats::rss(double b0, double b1) const {
  const double offset = mean_y - b0 - b1 * mean_x;
  return syy - 2.0 * b1 * sxy + b1 * b1 * sxx + static_cast<double>(n) * offset * offset;
}

Ensemble::Ensemble(std::vector<EnsembleRow> rows, std::string predictor_name, std::string response_name)
    : rows_(std::move(rows)),
      predictor_name_(std::move(predictor_name)),
      response_name_(std::move(response_name)) {
  if (rows_.size() < kMinRows) {
    throw Error(ErrorKind::parse,
                "ensemble needs at least 3 models, got " + std::to_string(rows_.size()));
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    const std::string where = "row " + std::to_string(i + 1) + " ('" + r.model + "')";
    if (r.model.empty()) throw Error(ErrorKind::parse, "row " + std::to_string(i + 1) + ": empty model label");
    if (!std::isfinite(r.x) || !std::isfinite(r.y)) throw Error(ErrorKind::parse, where + ": non-finite value");
    if (!labels.insert(r.model).second) throw Error(ErrorKind::parse, where + ": duplicate model label");
  }
  const bool constant_x = std::all_of(rows_.begin(), rows_.end(), [&](const auto& r) { return r.x == rows_[0].x; });
  if (constant_x) throw Error(ErrorKind::parse, "degenerate predictor: all x values are identical");
  stats_ = compute_stats(rows_);
}

Ensemble parse_ensemble_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::vector<EnsembleRow> rows;
  std::size_t line_no = 0;
  int col_model = -1, col_x = -1, col_y = -1;
  std::size_t width = 0;
  bool have_header = false;

  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (trim(line).empty()) continue;

    auto fields = split_record(line, line_no);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        std::string name = fields[i];
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        if (name == "model") col_model = static_cast<int>(i);
        if (name == "x") col_x = static_cast<int>(i);
        if (name == "y") col_y = static_cast<int>(i);
      }
      std::string missing;
      if (col_model < 0) missing += " model";
      if (col_x < 0) missing += " x";
      if (col_y < 0) missing += " y";
      if (!missing.empty())
        throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": header missing column(s):" + missing);
      width = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != width) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                        " fields, found " + std::to_string(fields.size()));
    }
    EnsembleRow row;
    row.model = fields[static_cast<std::size_t>(col_model)];
    if (row.model.empty()) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": empty model label");
    row.x = parse_number(fields[static_cast<std::size_t>(col_x)], "x", line_no);
    row.y = parse_number(fields[static_cast<std::size_t>(col_y)], "y", line_no);
    for (const auto& existing : rows) {
      if (existing.model == row.model)
        throw Error(ErrorKind::parse,
                    "line " + std::to_string(line_no) + ": duplicate model label '" + row.model + "'");
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(ErrorKind::parse, "empty ensemble file");
  return Ensemble(std::move(rows));
}

Ensemble load_ensemble_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, "cannot open ensemble file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ensemble_csv(buf.str());
}

void write_ensemble_csv(std::ostream& out, const Ensemble& e) {
  out << "model,x,y\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : e.rows()) {
    const bool quote = r.model.find_first_of(",\"") != std::string::npos;
    if (quote) {
      out << '"';
      for (char c : r.model) out << (c == '"' ? "\"\"" : std::string(1, c));
      out << '"';
    } else {
      out << r.model;
    }
    out << ',' << r.x << ',' << r.y << '\n';
  }
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------

void ObservationSpec::validate() const {
  if (!std::isfinite(z)) throw Error(ErrorKind::domain, "observation z must be finite");
  if (!std::isfinite(sigma_z) || !(sigma_z > 0.0)) throw Error(ErrorKind::domain, "sigma_z must be > 0");
}

void PredictorPrior::validate() const {
  if (kind == Kind::flat) return;
  if (!std::isfinite(mu_x)) throw Error(ErrorKind::domain, "mu_x must be finite");
  if (!std::isfinite(sigma_x) || !(sigma_x > 0.0)) throw Error(ErrorKind::domain, "sigma_x must be > 0");
}

const std::vector<CatalogEntry>& builtin_catalog() {
  static const std::vector<CatalogEntry> catalog{
      {"cox", {0.13, 0.016}, PredictorPrior::normal(0.15, 1.0),
       "Cox et al. (2018) temperature-variability metric Psi; HadCRUT4 observation"},
      {"sherwood", {0.825, 0.072}, PredictorPrior::flat(),
       "Sherwood et al. (2014) lower-tropospheric mixing index"},
      {"brient_schneider", {-0.96, 0.22}, PredictorPrior::flat(),
       "Brient and Schneider (2016) low-cloud reflection covariance with temperature"},
      {"tian", {1.0, 0.5}, PredictorPrior::flat(), "Tian (2015) double-ITCZ bias"},
      {"zhai", {-1.285, 0.565}, PredictorPrior::flat(),
       "Zhai et al. (2015) seasonal marine boundary-layer cloud fraction response to SST"},
  };
  return catalog;
}

const CatalogEntry& find_builtin(std::string_view name) {
  for (const auto& entry : builtin_catalog()) {
    if (entry.name == name) return entry;
  }
  throw Error(ErrorKind::not_found, "unknown built-in constraint '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

Ensemble synthetic_ensemble(const SyntheticSpec& spec, RandomStream& rng) {
  if (spec.n < Ensemble::kMinRows) throw Error(ErrorKind::domain, "synthetic ensemble needs n >= 3");
  if (!(spec.x_sd > 0.0) || !(spec.sigma >= 0.0)) throw Error(ErrorKind::domain, "synthetic spec needs x_sd > 0, sigma >= 0");
  const std::size_t n = spec.n;
  std::vector<double> x(n), e(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = spec.x_mean + spec.x_sd * rng.normal();
    e[i] = spec.sigma * rng.normal();
  }

  if (spec.exact) {
    const double dn = static_cast<double>(n);
    double mx = 0.0;
    for (double v : x) mx += v;
    mx /= dn;
    double sxx = 0.0;
    for (double v : x) sxx += (v - mx) * (v - mx);
    const double scale = spec.x_sd * std::sqrt((dn - 1.0) / sxx);
    for (double& v : x) v = spec.x_mean + (v - mx) * scale;

    // Project the residuals onto the orthogonal complement of span{1, x}.
    double me = 0.0;
    for (double v : e) me += v;
    me /= dn;
    double sxe = 0.0;
    sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sxe += (x[i] - spec.x_mean) * (e[i] - me);
      sxx += (x[i] - spec.x_mean) * (x[i] - spec.x_mean);
    }
    const double b = sxe / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      e[i] -= me + b * (x[i] - spec.x_mean);
      rss += e[i] * e[i];
    }
    if (n > 2 && rss > 0.0) {
      const double target = spec.sigma * std::sqrt((dn - 2.0) / rss);
      for (double& v : e) v *= target;
    }
  }

  std::vector<EnsembleRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream label;
    label << "model" << std::setw(3) << std::setfill('0') << (i + 1);
    rows[i] = {label.str(), x[i], spec.intercept + spec.slope * x[i] + e[i]};
  }
  return Ensemble(std::move(rows));
}

SyntheticSpec cox_like_spec() {
  // 16 models; residual sd, predictor spread and mean chosen so that the
  // reference posterior has beta0 1.23 (0.46), beta1 12.06 (2.62), sigma
  // mean 0.59.
  return SyntheticSpec{16, 1.23, 12.06, 0.5577197602910186, 0.16589631048104952, 0.05936664496738699, true};
}

}  // namespace ecbayes
