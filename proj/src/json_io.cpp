#include "ecbayes/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "ecbayes/error.hpp"

namespace ecbayes {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": non-numeric value '" + s + "'");
  }
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    f(line, line_no);
  }
}

}  // namespace

std::string level_key(double level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", level);
  return buf;
}

json to_json(const PosteriorSummary& s) {
  return {{"beta0", {{"mean", s.beta0_hat}, {"sd", s.sd_beta0}}},
          {"beta1", {{"mean", s.beta1_hat}, {"sd", s.sd_beta1}}},
          {"sigma",
           {{"mean", s.sigma_mean},
            {"sd", s.sigma_sd},
            {"folded_normal", {{"location", s.sigma_fn.location}, {"spread2", s.sigma_fn.spread2}}}}},
          {"rho", s.rho},
          {"draws", s.draws}};
}

json to_json(const LaplaceReport& r) {
  return {{"skewness", r.skewness}, {"excess_kurtosis", r.excess_kurtosis}, {"approximately_normal", r.approximately_normal}};
}

json to_json(const ConvergenceReport& r) {
  return {{"rhat", r.rhat}, {"ess", r.ess}, {"iterations_per_chain", r.iterations_per_chain}, {"converged", r.converged}};
}

json to_json(const CatalogEntry& e) {
  json prior{{"kind", e.predictor_prior.kind == PredictorPrior::Kind::flat ? "flat" : "normal"}};
  if (e.predictor_prior.kind == PredictorPrior::Kind::normal) {
    prior["mu_x"] = e.predictor_prior.mu_x;
    prior["sigma_x"] = e.predictor_prior.sigma_x;
  }
  return {{"name", e.name},
          {"observation", {{"z", e.observation.z}, {"sigma_z", e.observation.sigma_z}}},
          {"predictor_prior", prior},
          {"notes", e.notes}};
}

json to_json(const MiningResult& r) {
  return {{"max_abs_corr", r.max_abs_corr},
          {"argmax", json::array({r.argmax.first, r.argmax.second})},
          {"pairs", r.pairs},
          {"histogram", {{"lo", r.histogram.lo}, {"hi", r.histogram.hi}, {"counts", r.histogram.counts}}}};
}

json reality_json(const RealityPrior& rp) {
  const auto& c = rp.sigma_beta_star;
  const double sd0 = std::sqrt(c.xx), sd1 = std::sqrt(c.yy);
  json out{{"Sigma_beta_star", json::array({json::array({c.xx, c.xy}), json::array({c.xy, c.yy})})},
           {"sd_beta0_star", sd0},
           {"sd_beta1_star", sd1},
           {"correlation", sd0 > 0.0 && sd1 > 0.0 ? c.xy / (sd0 * sd1) : 0.0},
           {"xi", rp.xi},
           {"warnings", rp.warnings}};
  const double total = std::sqrt(rp.summary.sd_beta1 * rp.summary.sd_beta1 + c.yy);
  if (total > 0.0 && std::isfinite(total)) {
    out["total_sd_beta1"] = total;
    out["sign_flip_probability"] = normal_cdf(-std::abs(rp.summary.beta1_hat) / total);
  }
  return out;
}

json to_json(const PredictiveResult& r) {
  json intervals = json::object();
  for (const auto& li : r.intervals) intervals[level_key(li.level)] = json::array({li.interval.lo, li.interval.hi});
  json density = json::array();
  for (const auto& p : r.density) density.push_back(json::array({p.x, p.density}));
  return {{"median", r.median},
          {"intervals", intervals},
          {"density", density},
          {"x_star", {{"mean", r.x_star.mean}, {"sd", r.x_star.sd}}},
          {"seed", r.seed},
          {"draws", r.y_star_draws.size()},
          {"provenance", r.provenance},
          {"reality", reality_json(r.reality)},
          {"warnings", r.warnings}};
}

PredictiveResult predictive_result_from_json(const json& doc) {
  try {
    PredictiveResult r;
    r.median = doc.at("median").get<double>();
    for (const auto& [key, value] : doc.at("intervals").items()) {
      r.intervals.push_back({std::stod(key), {value.at(0).get<double>(), value.at(1).get<double>()}});
    }
    std::sort(r.intervals.begin(), r.intervals.end(), [](const auto& a, const auto& b) { return a.level < b.level; });
    for (const auto& p : doc.at("density")) r.density.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    r.x_star = {doc.at("x_star").at("mean").get<double>(), doc.at("x_star").at("sd").get<double>()};
    r.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("provenance")) r.provenance = doc.at("provenance").get<std::string>();
    if (doc.contains("warnings")) r.warnings = doc.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed predictive result: ") + e.what());
  }
}

json fit_payload(const RegressionPosterior& post, const PosteriorSummary& summary, const Ensemble& e) {
  json out{{"summary", to_json(summary)},
           {"laplace", to_json(laplace_check(post))},
           {"prior", to_json(post.prior)},
           {"n", e.size()},
           {"chains", post.chains},
           {"warnings", post.warnings}};
  out["diagnostics"] = post.convergence ? to_json(*post.convergence) : json(nullptr);
  return out;
}

void write_density_csv(std::ostream& out, const std::vector<DensityPoint>& density) {
  out << "x,density\n";
  for (const auto& p : density) out << fmt17(p.x) << ',' << fmt17(p.density) << '\n';
}

std::vector<DensityPoint> parse_density_csv(std::string_view text) {
  std::vector<DensityPoint> out;
  bool header = true;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (header) {
      if (line != "x,density") throw Error(ErrorKind::parse, "density CSV must start with 'x,density'");
      header = false;
      return;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 2) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected 2 fields");
    out.push_back({to_double(f[0], line_no), to_double(f[1], line_no)});
  });
  return out;
}

void write_draws_csv(std::ostream& out, const RegressionPosterior& post) {
  out << "chain,beta0,beta1,sigma\n";
  const std::size_t per = post.per_chain();
  for (std::size_t i = 0; i < post.draws.size(); ++i) {
    const auto& d = post.draws[i];
    out << (per ? i / per : 0) << ',' << fmt17(d.beta0) << ',' << fmt17(d.beta1) << ',' << fmt17(d.sigma) << '\n';
  }
}

RegressionPosterior parse_draws_csv(std::string_view text) {
  RegressionPosterior post;
  bool header = true;
  std::size_t last_chain = 0;
  std::vector<std::size_t> per_chain;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (header) {
      if (line != "chain,beta0,beta1,sigma")
        throw Error(ErrorKind::parse, "draws CSV must start with 'chain,beta0,beta1,sigma'");
      header = false;
      return;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected 4 fields");
    const auto chain = static_cast<std::size_t>(to_double(f[0], line_no));
    if (chain < last_chain || chain > last_chain + 1)
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": draws must be grouped by chain");
    last_chain = chain;
    if (per_chain.size() <= chain) per_chain.push_back(0);
    ++per_chain[chain];
    Draw d{to_double(f[1], line_no), to_double(f[2], line_no), to_double(f[3], line_no)};
    if (!(d.sigma > 0.0)) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": sigma must be > 0");
    post.draws.push_back(d);
  });
  if (post.draws.empty()) throw Error(ErrorKind::parse, "draws CSV has no rows");
  for (auto c : per_chain) {
    if (c != per_chain.front()) throw Error(ErrorKind::parse, "chains have unequal lengths");
  }
  post.chains = per_chain.size();
  return post;
}

}  // namespace ecbayes
