#pragma once

// Experiment configuration, the generator -> extraction -> dimension pipeline,
// and its on-disk artifacts.
//
// Config files are INI-style ("[section]" then "key = value"); see README.md
// for the keys.  Overrides use "section.key=value".

#include "limsup/dimension.hpp"
#include "limsup/extraction.hpp"
#include "limsup/generators.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace limsup {

inline constexpr const char* tool_version = "0.1.0";

struct ExperimentConfig {
  // [generator]
  std::string generator = "farey";  // farey | random | ifs | dyadic | file
  std::int64_t q_max = 1000;
  std::size_t n = 10000;
  double a = 2.0;
  std::optional<std::uint64_t> seed;
  std::size_t dim = 1;
  int depth = 10;
  double factor = 3.0;
  std::vector<double> x;  // ifs base point, default origin
  int k_max = 12;
  std::string file;
  // [measure]
  std::string measure = "lebesgue";  // lebesgue | cantor | file
  double p = 0.5;
  std::string measure_file;
  // [pipeline]
  bool weakly_redundant = false;
  int wr_k_max = 10;
  double wr_target = 0.75;
  bool conditioned = false;
  int cond_k_max = 6;
  std::size_t schedule_length = 0;  // 0: k_max + 16
  std::string transform = "contract";  // contract | rectangle
  double delta = 2.0;
  std::vector<double> tau;
  std::size_t s_points = 101;
  double tolerance = 0.05;
  std::size_t regions = 0;
  std::size_t persist_limit = 1'000'000;
  std::size_t budget = default_budget;
  // [output]
  std::string out = "out";
};

namespace detail {

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::string tok;
  std::istringstream is(s);
  while (std::getline(is, tok, ','))
    if (tok.find_first_not_of(" \t") != std::string::npos) v.push_back(std::stod(tok));
  return v;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", v[i]);
    s += buf;
  }
  return s;
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("not a boolean: " + s);
}

}  // namespace detail

inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& v) {
  using detail::parse_bool;
  using detail::parse_list;
  try {
    if (key == "generator.kind") c.generator = v;
    else if (key == "generator.q_max") c.q_max = std::stoll(v);
    else if (key == "generator.n") c.n = std::stoull(v);
    else if (key == "generator.a") c.a = std::stod(v);
    else if (key == "generator.seed") {
      if (v.empty())
        c.seed.reset();
      else
        c.seed = std::stoull(v);
    }
    else if (key == "generator.dim") c.dim = std::stoull(v);
    else if (key == "generator.depth") c.depth = std::stoi(v);
    else if (key == "generator.factor") c.factor = std::stod(v);
    else if (key == "generator.x") c.x = parse_list(v);
    else if (key == "generator.k_max") c.k_max = std::stoi(v);
    else if (key == "generator.file") c.file = v;
    else if (key == "measure.kind") c.measure = v;
    else if (key == "measure.p") c.p = std::stod(v);
    else if (key == "measure.file") c.measure_file = v;
    else if (key == "pipeline.weakly_redundant") c.weakly_redundant = parse_bool(v);
    else if (key == "pipeline.wr_k_max") c.wr_k_max = std::stoi(v);
    else if (key == "pipeline.wr_target") c.wr_target = std::stod(v);
    else if (key == "pipeline.conditioned") c.conditioned = parse_bool(v);
    else if (key == "pipeline.cond_k_max") c.cond_k_max = std::stoi(v);
    else if (key == "pipeline.schedule_length") c.schedule_length = std::stoull(v);
    else if (key == "pipeline.transform") c.transform = v;
    else if (key == "pipeline.delta") c.delta = std::stod(v);
    else if (key == "pipeline.tau") c.tau = parse_list(v);
    else if (key == "pipeline.s_points") c.s_points = std::stoull(v);
    else if (key == "pipeline.tolerance") c.tolerance = std::stod(v);
    else if (key == "pipeline.regions") c.regions = std::stoull(v);
    else if (key == "pipeline.persist_limit") c.persist_limit = std::stoull(v);
    else if (key == "pipeline.budget") c.budget = std::stoull(v);
    else if (key == "output.dir") c.out = v;
    else throw std::invalid_argument("unknown config key " + key);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for " + key + ": " + v);
  }
}

// "section.key=value"
inline void apply_override(ExperimentConfig& c, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("override needs key=value: " + kv);
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  set_config_value(c, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

inline ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : pt) {
    if (body.empty()) throw std::invalid_argument("config key outside a section: " + section);
    for (const auto& [key, val] : body) set_config_value(c, section + "." + key, val.data());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  return parse_config(in);
}

// canonical text; also the hashed form
inline std::string format_config(const ExperimentConfig& c) {
  using detail::fmt;
  std::ostringstream os;
  os << "[generator]\n"
     << "kind = " << c.generator << "\nq_max = " << c.q_max << "\nn = " << c.n
     << "\na = " << fmt(c.a) << "\nseed = " << (c.seed ? std::to_string(*c.seed) : "")
     << "\ndim = " << c.dim << "\ndepth = " << c.depth << "\nfactor = " << fmt(c.factor)
     << "\nx = " << detail::format_list(c.x) << "\nk_max = " << c.k_max
     << "\nfile = " << c.file << "\n\n[measure]\nkind = " << c.measure << "\np = " << fmt(c.p)
     << "\nfile = " << c.measure_file << "\n\n[pipeline]\nweakly_redundant = "
     << (c.weakly_redundant ? "true" : "false") << "\nwr_k_max = " << c.wr_k_max
     << "\nwr_target = " << fmt(c.wr_target)
     << "\nconditioned = " << (c.conditioned ? "true" : "false")
     << "\ncond_k_max = " << c.cond_k_max << "\nschedule_length = " << c.schedule_length
     << "\ntransform = " << c.transform << "\ndelta = " << fmt(c.delta)
     << "\ntau = " << detail::format_list(c.tau) << "\ns_points = " << c.s_points
     << "\ntolerance = " << fmt(c.tolerance) << "\nregions = " << c.regions
     << "\npersist_limit = " << c.persist_limit << "\nbudget = " << c.budget
     << "\n\n[output]\ndir = " << c.out << "\n";
  return os.str();
}

// 64-bit FNV-1a
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// the hash ignores the output directory
inline std::string config_hash(const ExperimentConfig& c) {
  ExperimentConfig k = c;
  k.out.clear();
  return hex64(fnv1a(format_config(k)));
}

inline void validate_config(const ExperimentConfig& c) {
  const std::vector<std::string> gens{"farey", "random", "ifs", "dyadic", "file"};
  if (std::find(gens.begin(), gens.end(), c.generator) == gens.end())
    throw std::invalid_argument("unknown generator " + c.generator);
  if (c.generator == "random" && !c.seed)
    throw std::invalid_argument("the random generator needs a seed");
  if (c.generator == "file" && c.file.empty()) throw std::invalid_argument("generator.file missing");
  if (c.q_max < 1 || c.dim < 1 || c.depth < 0 || c.k_max < 0 || c.budget == 0 ||
      c.s_points < 2 || c.persist_limit == 0 || !(c.factor > 0.0) || !(c.a > 0.0))
    throw std::invalid_argument("budgets and sizes must be positive");
  if (c.transform != "contract" && c.transform != "rectangle")
    throw std::invalid_argument("unknown transform " + c.transform);
  if (c.transform == "contract" && !(c.delta >= 1.0))
    throw std::invalid_argument("delta must be >= 1");
  if (c.transform == "rectangle") check_tau(c.tau);
  if (c.measure != "lebesgue" && c.measure != "cantor" && c.measure != "file")
    throw std::invalid_argument("unknown measure " + c.measure);
}

inline SelfSimilarMeasure config_measure(const ExperimentConfig& c) {
  if (c.measure == "lebesgue") return lebesgue(c.dim);
  if (c.measure == "cantor") {
    if (c.dim != 1) throw std::invalid_argument("the Cantor measure lives in d = 1");
    return cantor(c.p);
  }
  return load_measure(c.measure_file);
}

// the pipeline needs the measure and the rectangle transform to agree on d
inline std::vector<std::string> config_warnings(const ExperimentConfig& c,
                                                const SelfSimilarMeasure& mu) {
  std::vector<std::string> w;
  if (c.transform == "rectangle" && !mu.lebesgue)
    w.push_back(
        "rectangle prediction assumes the support is the closure of its interior; this "
        "measure's attractor is not");
  return w;
}

struct StepReport {
  std::string name;
  double seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> values;
  std::vector<std::string> flags;
};

struct RegionEstimate {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
  double estimate = NAN, tail_estimate = NAN;
};

struct RunManifest {
  std::string config_hash;
  std::string version = tool_version;
  std::string prng = prng_name;
  std::string config_text;
  std::vector<StepReport> steps;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, std::string>> outputs;  // file, FNV-1a of its bytes
  DimensionReport dimension;
  std::vector<RegionEstimate> regions;
  std::string dir;
  bool clean() const { return warnings.empty(); }
};

// ---- Farey without materialising the balls ---------------------------------

inline std::vector<std::int64_t> totients(std::int64_t q_max) {
  std::vector<std::int64_t> phi(static_cast<std::size_t>(q_max) + 1);
  for (std::int64_t i = 0; i <= q_max; ++i) phi[static_cast<std::size_t>(i)] = i;
  for (std::int64_t p = 2; p <= q_max; ++p)
    if (phi[static_cast<std::size_t>(p)] == p)
      for (std::int64_t m = p; m <= q_max; m += p)
        phi[static_cast<std::size_t>(m)] -= phi[static_cast<std::size_t>(m)] / p;
  return phi;
}

// number of balls gen_farey(q_max) produces
inline std::size_t farey_count(std::int64_t q_max) {
  const auto phi = totients(q_max);
  std::size_t n = 1;
  for (std::int64_t q = 1; q <= q_max; ++q) n += static_cast<std::size_t>(phi[static_cast<std::size_t>(q)]);
  return n;
}

// the natural cover of gen_farey(q_max); level q holds phi(q) balls (2 for q = 1)
inline NaturalCover farey_natural_cover(std::int64_t q_max, const std::string& transform,
                                        double delta, const std::vector<double>& tau) {
  const auto phi = totients(q_max);
  NaturalCover nc;
  nc.dim = 1;
  if (transform == "rectangle") {
    check_tau(tau);
    if (tau.size() != 1) throw std::invalid_argument("tau length must equal d");
    nc.kind = NaturalCover::Kind::rectangles;
    nc.tau = tau;
  }
  nc.provenance = "farey q_max=" + std::to_string(q_max) + " (levels)";
  nc.mass_sum = NAN;
  for (std::int64_t q = 1; q <= q_max; ++q) {
    const double qq = static_cast<double>(q);
    const double r = 1.0 / (qq * qq);
    const std::size_t c = q == 1 ? 2 : static_cast<std::size_t>(phi[static_cast<std::size_t>(q)]);
    const double size = nc.kind == NaturalCover::Kind::balls ? 2.0 * std::pow(r, delta) : 2.0 * r;
    nc.add(scale_index(r).k, size, nc.count, c);
  }
  return nc;
}

// ---- the pipeline ----------------------------------------------------------

namespace detail {

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline void write_balls_csv(std::ostream& os, const BallSequence& s) {
  os << "index";
  for (std::size_t j = 0; j < s.dim(); ++j) os << ",c" << j + 1;
  os << ",radius\n";
  char buf[40];
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << i;
    for (std::size_t j = 0; j < s.dim(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", s.center(i, j));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", s.radius(i));
    os << buf;
  }
}

inline std::string file_hash(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

inline double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

inline NaturalCover natural_cover_for(const ExperimentConfig& c, const BallSequence& seq,
                                      const SelfSimilarMeasure* mu) {
  if (c.transform == "rectangle") return rectangle_cover(seq, c.tau, mu);
  return contracted_cover(seq, c.delta, mu);
}

inline double prediction_for(const ExperimentConfig& c, double dim_mu, std::string& formula) {
  if (c.transform == "rectangle") {
    formula = "min_i (dim_mu + sum_{j<=i}(tau_i - tau_j)) / tau_i";
    return predict_rect_dim(std::min(dim_mu, static_cast<double>(c.tau.size())), c.tau);
  }
  formula = "dim_mu / delta";
  return predict_shrunk_ball_dim(dim_mu, c.delta);
}

inline std::vector<double> s_grid_for(const ExperimentConfig& c, std::size_t d) {
  std::vector<double> g(c.s_points);
  for (std::size_t i = 0; i < c.s_points; ++i)
    g[i] = static_cast<double>(d) * static_cast<double>(i) / static_cast<double>(c.s_points - 1);
  return g;
}

inline BallSequence generate(const ExperimentConfig& c, const SelfSimilarMeasure& mu,
                             StepReport& step) {
  if (c.generator == "farey") return gen_farey(c.q_max);
  if (c.generator == "dyadic") return gen_dyadic_inballs(c.k_max, c.dim);
  if (c.generator == "file") {
    auto s = load_sequence(c.file);
    if (s.dim() != c.dim) throw std::invalid_argument("sequence file dimension differs from generator.dim");
    return s;
  }
  if (c.generator == "ifs") {
    point x = c.x.empty() ? point(mu.d, 0.0) : c.x;
    if (mu.lebesgue) throw std::invalid_argument("the ifs generator needs a self-similar measure");
    return gen_ifs_orbit(mu, x, c.depth, c.factor);
  }
  auto rb = gen_random(c.n, c.a, *c.seed, c.dim);
  step.values.push_back({"shepp_block_ratio", detail::fmt(rb.shepp.block_ratio)});
  step.values.push_back({"shepp_divergent", rb.shepp.divergent ? "true" : "false"});
  return std::move(rb.seq);
}

// Runs the configured pipeline and writes its artifacts under c.out.
// Every flag raised by a step is copied into the manifest warnings.
inline RunManifest run_pipeline(const ExperimentConfig& c) {
  namespace fs = std::filesystem;
  validate_config(c);
  RunManifest man;
  man.config_hash = config_hash(c);
  man.config_text = format_config(c);
  man.dir = c.out;
  const fs::path dir(c.out);
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto open_out = [&](const std::string& name) {
    written.push_back(name);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  auto close_step = [&](StepReport& st, const detail::Timer& t) {
    st.seconds = t.seconds();
    for (const auto& f : st.flags) man.warnings.push_back(st.name + ": " + f);
    man.steps.push_back(st);
  };

  const SelfSimilarMeasure mu = config_measure(c);
  if (c.transform == "rectangle" && c.tau.size() != mu.d)
    throw std::invalid_argument("tau length must equal the dimension");
  for (const auto& w : config_warnings(c, mu)) man.warnings.push_back(w);
  const double dim_mu = measure_dimension(mu);

  // generator
  StepReport gen_step{"generate", 0.0, {}, {}};
  detail::Timer t_gen;
  const bool extraction = c.weakly_redundant || c.conditioned;
  std::optional<BallSequence> seq;
  std::optional<NaturalCover> streamed;
  if (c.generator == "farey" && !extraction && c.regions == 0 &&
      farey_count(c.q_max) > c.persist_limit) {
    streamed = farey_natural_cover(c.q_max, c.transform, c.delta, c.tau);
    gen_step.values.push_back({"balls", std::to_string(streamed->count)});
    gen_step.values.push_back({"materialised", "false"});
    auto f = open_out("farey_levels.csv");
    f << "q,count,radius\n";
    const auto phi = totients(c.q_max);
    for (std::int64_t q = 1; q <= c.q_max; ++q) {
      const double qq = static_cast<double>(q);
      f << q << ',' << (q == 1 ? 2 : phi[static_cast<std::size_t>(q)]) << ','
        << detail::fmt(1.0 / (qq * qq)) << '\n';
    }
  } else {
    seq = generate(c, mu, gen_step);
    if (seq->dim() != mu.d) throw std::invalid_argument("generator and measure dimensions differ");
    gen_step.values.push_back({"balls", std::to_string(seq->size())});
    gen_step.values.push_back({"materialised", "true"});
    if (seq->size() <= c.persist_limit) {
      auto f = open_out("balls.csv");
      detail::write_balls_csv(f, *seq);
    } else {
      gen_step.values.push_back({"balls_csv", "skipped: above persist_limit"});
    }
    if (c.generator == "random") {
      auto sd = shepp_diagnostic(harmonic_lengths(c.n, c.a));
      auto f = open_out("shepp.csv");
      f << "N,partial_sum\n";
      for (std::size_t i = 0; i < sd.partial.size(); ++i)
        f << i + 1 << ',' << detail::fmt(sd.partial[i]) << '\n';
    }
  }
  close_step(gen_step, t_gen);

  // extraction steps
  BallSequence work = seq ? *seq : BallSequence(1);
  if (c.weakly_redundant) {
    StepReport st{"weakly_redundant", 0.0, {}, {}};
    detail::Timer t;
    ExtractOptions eo;
    auto res = extract_weakly_redundant(work, mu, c.wr_k_max, c.wr_target, eo);
    st.values.push_back({"kept", std::to_string(res.selected.size())});
    st.values.push_back({"slope_tail", detail::fmt(res.redundancy.slope_tail)});
    st.values.push_back({"c_empirical", detail::fmt(res.ac.c_empirical)});
    bool bound = true;
    for (const auto& cert : res.certificate)
      if (cert.families > static_cast<std::size_t>(cert.k) + 1 || !cert.disjoint) bound = false;
    st.values.push_back({"families_within_k_plus_1", bound ? "true" : "false"});
    if (!bound) st.flags.push_back("J_k exceeds k+1");
    for (const auto& f : res.flags) st.flags.push_back(f);
    {
      auto f = open_out("wr_records.csv");
      write_extraction_csv(f, res);
    }
    {
      auto f = open_out("redundancy.csv");
      write_redundancy_csv(f, res.redundancy);
    }
    work = work.subsequence(res.selected);
    close_step(st, t);
  }
  if (c.conditioned) {
    StepReport st{"conditioned", 0.0, {}, {}};
    detail::Timer t;
    const std::size_t len = c.schedule_length ? c.schedule_length
                                               : static_cast<std::size_t>(c.cond_k_max) + 16;
    ConditionedOptions co;
    auto res = extract_conditioned(work, mu, default_schedule(len), c.cond_k_max, co);
    std::vector<double> beyond;
    std::size_t within = 0;
    for (std::size_t i = res.cut_index; i < res.records.size(); ++i) {
      beyond.push_back(res.records[i].ratio);
      if (std::fabs(res.records[i].ratio - dim_mu) <= 0.1) ++within;
    }
    st.values.push_back({"kept", std::to_string(res.selected.size())});
    st.values.push_back({"cut_index", std::to_string(res.cut_index)});
    st.values.push_back({"dim_mu", detail::fmt(dim_mu)});
    st.values.push_back({"beyond_cut", std::to_string(beyond.size())});
    st.values.push_back({"beyond_cut_within_0.1", std::to_string(within)});
    st.values.push_back({"median_ratio_beyond_cut", detail::fmt(detail::median(beyond))});
    for (const auto& f : res.flags) st.flags.push_back(f);
    {
      auto f = open_out("cond_records.csv");
      write_extraction_csv(f, res);
    }
    work = work.subsequence(res.selected);
    close_step(st, t);
  }

  // transform and critical exponent
  StepReport dim_step{"dimension", 0.0, {}, {}};
  detail::Timer t_dim;
  const bool with_mass = seq && work.size() <= c.persist_limit;
  NaturalCover nc = streamed ? *streamed : natural_cover_for(c, work, with_mass ? &mu : nullptr);
  std::string formula;
  const double pred = prediction_for(c, dim_mu, formula);
  man.dimension = natural_cover_critical_exponent(nc, s_grid_for(c, nc.dim), pred, c.tolerance);
  man.dimension.prediction_formula = formula;
  dim_step.values.push_back({"Q", std::to_string(man.dimension.Q)});
  dim_step.values.push_back({"prediction", detail::fmt(pred)});
  dim_step.values.push_back({"estimate", detail::fmt(man.dimension.estimate)});
  dim_step.values.push_back({"tail_estimate", detail::fmt(man.dimension.tail_estimate)});
  dim_step.values.push_back({"within_tolerance",
                             std::fabs(man.dimension.estimate - pred) <= c.tolerance ? "true"
                                                                                      : "false"});
  if (with_mass) dim_step.values.push_back({"mass_sum", detail::fmt(nc.mass_sum)});
  for (const auto& f : man.dimension.flags) dim_step.flags.push_back(f);
  {
    auto f = open_out("dimension.csv");
    write_dimension_csv(f, man.dimension);
  }
  {
    auto f = open_out("tail_sum.dat");
    for (const auto& row : man.dimension.grid)
      f << detail::fmt(row.s) << ' ' << detail::fmt(row.tail_sum) << '\n';
  }
  if (c.regions > 0) {
    auto f = open_out("regions.csv");
    f << "region,lo,hi,count,estimate,tail_estimate\n";
    for (std::size_t r = 0; r < c.regions; ++r) {
      RegionEstimate re;
      re.lo = static_cast<double>(r) / static_cast<double>(c.regions);
      re.hi = static_cast<double>(r + 1) / static_cast<double>(c.regions);
      std::vector<std::size_t> idx;
      for (std::size_t n = 0; n < work.size(); ++n) {
        const double x0 = work.center(n, 0);
        if (x0 >= re.lo && (x0 < re.hi || (r + 1 == c.regions && x0 <= re.hi))) idx.push_back(n);
      }
      re.count = idx.size();
      if (!idx.empty()) {
        auto rep = natural_cover_critical_exponent(natural_cover_for(c, work.subsequence(idx), nullptr),
                                                   s_grid_for(c, nc.dim), pred, c.tolerance);
        re.estimate = rep.estimate;
        re.tail_estimate = rep.tail_estimate;
      }
      man.regions.push_back(re);
      f << r << ',' << detail::fmt(re.lo) << ',' << detail::fmt(re.hi) << ',' << re.count << ','
        << detail::fmt(re.estimate) << ',' << detail::fmt(re.tail_estimate) << '\n';
    }
  }
  close_step(dim_step, t_dim);

  {
    std::ofstream f(dir / "config.ini", std::ios::binary);
    f << man.config_text;
  }
  for (const auto& name : written) man.outputs.push_back({name, detail::file_hash(dir / name)});

  nlohmann::ordered_json j;
  j["config_hash"] = man.config_hash;
  j["version"] = man.version;
  j["prng"] = man.prng;
  j["config"] = man.config_text;
  for (const auto& st : man.steps) {
    nlohmann::ordered_json s;
    s["name"] = st.name;
    s["seconds"] = st.seconds;
    for (const auto& [k, v] : st.values) s["values"][k] = v;
    s["flags"] = st.flags;
    j["steps"].push_back(s);
  }
  j["warnings"] = man.warnings;
  for (const auto& [name, h] : man.outputs) j["outputs"][name] = h;
  std::ofstream mf(dir / "manifest.json", std::ios::binary);
  mf << j.dump(2) << '\n';
  return man;
}

// config of a manifest written by run_pipeline
inline ExperimentConfig config_from_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open manifest " + path);
  auto j = nlohmann::json::parse(in);
  std::istringstream cs(j.at("config").get<std::string>());
  return parse_config(cs);
}

}  // namespace limsup
