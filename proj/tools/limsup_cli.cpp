// limsup: command-line front end.
// Exit status: 0 clean, 2 finished with flags, 1 error.

#include "limsup/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

using namespace limsup;

namespace {

struct Common {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t budget = default_budget;
  std::string config;
};

// "lebesgue[:d]", "cantor[:p]" or a measure file
SelfSimilarMeasure measure_arg(const std::string& s) {
  auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "lebesgue") return lebesgue(tail.empty() ? 1 : std::stoul(tail));
  if (head == "cantor") return cantor(tail.empty() ? 0.5 : std::stod(tail));
  return load_measure(s);
}

std::vector<double> numbers(const std::string& s) {
  std::istringstream is(s);
  std::vector<double> v;
  double x;
  while (is >> x) v.push_back(x);
  if (!is.eof()) throw std::invalid_argument("not a number list: " + s);
  return v;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int report_flags(const std::vector<std::string>& flags) {
  for (const auto& f : flags) std::cerr << "flag: " << f << '\n';
  return flags.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"limsup: limsup sets of balls, extraction and dimension estimates"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file of verb option defaults, one [verb] section each");
  Common com;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", com.out, "output file (directory for pipeline)");
    sub->add_option("--seed", com.seed, "random seed");
    sub->add_option("--budget", com.budget, "node budget for measure and content evaluation");
  };

  // gen
  auto* gen = app.add_subcommand("gen", "generate a ball sequence");
  common(gen);
  std::string gen_kind = "farey", gen_measure = "cantor";
  std::int64_t q_max = 100;
  std::size_t n = 1000, dim = 1;
  double a = 2.0, factor = 3.0;
  int depth = 6, k_max = 8;
  std::string x_str;
  gen->add_option("--kind", gen_kind, "farey | random | ifs | dyadic")
      ->check(CLI::IsMember({"farey", "random", "ifs", "dyadic"}));
  gen->add_option("--q-max", q_max);
  gen->add_option("--n", n);
  gen->add_option("--a", a, "random: l_n = a/n");
  gen->add_option("--dim", dim);
  gen->add_option("--depth", depth);
  gen->add_option("--factor", factor);
  gen->add_option("--x", x_str, "ifs base point");
  gen->add_option("--k-max", k_max);
  gen->add_option("--measure", gen_measure, "ifs measure");

  // extract
  auto* ext = app.add_subcommand("extract", "extract a subsequence");
  common(ext);
  std::string input, measure = "lebesgue", mode = "wr";
  double target = 0.75, eps = 0.1, v = 0.5, v_prime = -1.0;
  int ext_k = 8;
  std::size_t sched_len = 0;
  for (auto* sub : {ext}) {
    sub->add_option("--input", input, "sequence file")->required();
    sub->add_option("--measure", measure, "lebesgue[:d] | cantor[:p] | file");
  }
  ext->add_option("--mode", mode, "wr | lower | upper | conditioned")
      ->check(CLI::IsMember({"wr", "lower", "upper", "conditioned"}));
  ext->add_option("--k-max", ext_k);
  ext->add_option("--target", target);
  ext->add_option("--eps", eps);
  ext->add_option("--v", v);
  ext->add_option("--v-prime", v_prime);
  ext->add_option("--schedule-length", sched_len);

  // redundancy
  auto* red = app.add_subcommand("redundancy", "J_k per scale bucket");
  common(red);
  int red_k = 20;
  red->add_option("--input", input, "sequence file")->required();
  red->add_option("--k-max", red_k);

  // cover
  auto* cov = app.add_subcommand("cover", "greedy disjoint cover of an open set");
  common(cov);
  std::string omega_str;
  std::size_t g = 0;
  int rounds = 1;
  cov->add_option("--input", input, "sequence file")->required();
  cov->add_option("--measure", measure);
  cov->add_option("--omega", omega_str, "\"lo_1..lo_d hi_1..hi_d\" per box, ';' separated")
      ->required();
  cov->add_option("--g", g, "first index");
  cov->add_option("--target", target);
  cov->add_option("--rounds", rounds);

  // bc-check
  auto* bc = app.add_subcommand("bc-check", "Borel-Cantelli quasi-independence sums");
  common(bc);
  std::string ball_str;
  std::size_t bc_q = 1000;
  double bc_c = 10.0;
  bc->add_option("--input", input, "sequence file")->required();
  bc->add_option("--measure", measure);
  bc->add_option("--ball", ball_str, "\"c_1..c_d r\"")->required();
  bc->add_option("--q-max", bc_q);
  bc->add_option("--C", bc_c);

  // content
  auto* con = app.add_subcommand("content", "dyadic upper bound on H^s_t of a box union");
  common(con);
  std::vector<std::string> boxes;
  double s = 1.0, t = INFINITY;
  int con_depth = 12;
  bool open = false, keep = false;
  con->add_option("--box", boxes, "\"lo_1..lo_d hi_1..hi_d\" (repeatable)")->required();
  con->add_option("--s", s);
  con->add_option("--t", t);
  con->add_option("--depth", con_depth);
  con->add_flag("--open", open, "boxes are open");
  con->add_flag("--cover", keep, "print the cover");

  // dim
  auto* dm = app.add_subcommand("dim", "critical exponent of a natural cover");
  common(dm);
  double delta = 1.0, dim_mu = NAN, tol = 0.05;
  std::string tau_str;
  std::size_t points = 101;
  dm->add_option("--input", input, "sequence file")->required();
  dm->add_option("--measure", measure, "used for dim(mu) and masses");
  dm->add_option("--delta", delta);
  dm->add_option("--tau", tau_str, "rectangle exponents, e.g. \"1 2\"");
  dm->add_option("--dim-mu", dim_mu, "override dim(mu)");
  dm->add_option("--tolerance", tol);
  dm->add_option("--points", points);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "generator -> extraction -> dimension");
  common(pipe);
  std::vector<std::string> sets;
  pipe->add_option("--config", com.config, "config file")->check(CLI::ExistingFile);
  pipe->add_option("--set", sets, "section.key=value override (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      BallSequence seq;
      std::vector<std::string> flags;
      if (gen_kind == "farey") {
        seq = gen_farey(q_max);
      } else if (gen_kind == "dyadic") {
        seq = gen_dyadic_inballs(k_max, dim);
      } else if (gen_kind == "ifs") {
        auto mu = measure_arg(gen_measure);
        point x = x_str.empty() ? point(mu.d, 0.0) : numbers(x_str);
        seq = gen_ifs_orbit(mu, x, depth, factor);
      } else {
        if (!com.seed) throw std::invalid_argument("--seed is required for random balls");
        auto rb = gen_random(n, a, *com.seed, dim);
        std::cerr << "shepp block ratio " << rb.shepp.block_ratio
                  << (rb.shepp.divergent ? " (divergent)" : " (convergent)") << '\n';
        seq = std::move(rb.seq);
      }
      Output o(com.out);
      o.os() << "# " << seq.provenance() << '\n';
      write_sequence(o.os(), seq);
      return 0;
    }

    if (*ext) {
      auto seq = load_sequence(input);
      auto mu = measure_arg(measure);
      ExtractionResult res;
      if (mode == "wr") {
        res = extract_weakly_redundant(seq, mu, ext_k, target);
      } else if (mode == "lower") {
        res = extract_lower_conditioned(seq, mu, eps);
      } else if (mode == "upper") {
        res = extract_upper_conditioned(seq, mu, eps, v, v_prime);
      } else {
        const std::size_t len = sched_len ? sched_len : static_cast<std::size_t>(ext_k) + 16;
        res = extract_conditioned(seq, mu, default_schedule(len), ext_k);
        std::cerr << "cut index " << res.cut_index << '\n';
      }
      Output o(com.out);
      write_extraction_csv(o.os(), res);
      return report_flags(res.flags);
    }

    if (*red) {
      auto seq = load_sequence(input);
      auto rep = weak_redundancy_report(seq, red_k);
      Output o(com.out);
      write_redundancy_csv(o.os(), rep);
      std::cerr << "tail slope " << rep.slope_tail << '\n';
      return 0;
    }

    if (*cov) {
      auto seq = load_sequence(input);
      auto mu = measure_arg(measure);
      std::string spec;
      std::istringstream is(omega_str);
      std::string part;
      while (std::getline(is, part, ';')) spec += "box " + part + "\n";
      CoverOptions opt;
      opt.target = target;
      opt.rounds = rounds;
      auto fam = greedy_disjoint_cover(seq, mu, parse_open_set_spec(spec), g, opt);
      auto audit = audit_cover(seq, fam);
      Output o(com.out);
      o.os() << "index\n";
      for (auto i : fam.indices) o.os() << i << '\n';
      std::cerr << "covered fraction " << fam.covered_fraction << ", audit "
                << (audit.disjoint && audit.contained ? "ok" : audit.detail) << '\n';
      if (!(audit.disjoint && audit.contained)) return 1;
      return report_flags(fam.flags);
    }

    if (*bc) {
      auto seq = load_sequence(input);
      auto mu = measure_arg(measure);
      auto nums = numbers(ball_str);
      if (nums.size() < 2) throw std::invalid_argument("--ball needs a centre and a radius");
      Ball B(point(nums.begin(), nums.end() - 1), nums.back());
      auto rep = borel_cantelli_check(seq, mu, B, bc_q, bc_c);
      Output o(com.out);
      o.os() << "Q,S,P,ratio\n";
      for (std::size_t q = 0; q < rep.S.size(); ++q)
        o.os() << q + 1 << ',' << detail::fmt(rep.S[q]) << ',' << detail::fmt(rep.P[q]) << ','
               << detail::fmt(rep.ratio[q]) << '\n';
      std::cerr << "quasi-independent: " << (rep.quasi_independent ? "yes" : "no") << '\n';
      return report_flags(rep.flags);
    }

    if (*con) {
      std::vector<Box> set;
      for (const auto& b : boxes) {
        auto v = numbers(b);
        if (v.empty() || v.size() % 2) throw std::invalid_argument("box needs 2d numbers: " + b);
        const auto d = static_cast<std::ptrdiff_t>(v.size() / 2);
        set.push_back(Box{point(v.begin(), v.begin() + d), point(v.begin() + d, v.end()), open});
      }
      ContentOptions opt;
      opt.depth = con_depth;
      opt.budget = com.budget;
      opt.keep_cover = keep;
      auto est = hausdorff_content_upper(set, s, t, opt);
      Output o(com.out);
      o.os() << "s,t,value_upper,nodes\n"
             << detail::fmt(est.s) << ',' << detail::fmt(est.t) << ','
             << detail::fmt(est.value_upper) << ',' << est.nodes << '\n';
      if (keep)
        for (const auto& c : est.cover) {
          o.os() << "# cube g=" << c.generation;
          for (auto k : c.corner) o.os() << ' ' << k;
          o.os() << '\n';
        }
      return report_flags(est.flags);
    }

    if (*dm) {
      auto seq = load_sequence(input);
      auto mu = measure_arg(measure);
      if (mu.d != seq.dim()) throw std::invalid_argument("measure and sequence dimensions differ");
      const double dmu = std::isnan(dim_mu) ? measure_dimension(mu) : dim_mu;
      std::vector<std::string> flags;
      NaturalCover nc;
      double pred;
      if (!tau_str.empty()) {
        auto tau = numbers(tau_str);
        if (!mu.lebesgue)
          flags.push_back("rectangle prediction assumes the support is the closure of its interior");
        nc = rectangle_cover(seq, tau, &mu);
        pred = predict_rect_dim(std::min(dmu, static_cast<double>(tau.size())), tau);
      } else {
        nc = contracted_cover(seq, delta, &mu);
        pred = predict_shrunk_ball_dim(dmu, delta);
      }
      std::vector<double> grid(points);
      for (std::size_t i = 0; i < points; ++i)
        grid[i] = static_cast<double>(seq.dim()) * static_cast<double>(i) /
                  static_cast<double>(points - 1);
      auto rep = natural_cover_critical_exponent(nc, grid, pred, tol);
      Output o(com.out);
      write_dimension_csv(o.os(), rep);
      std::cerr << "prediction " << rep.prediction << ", estimate " << rep.estimate
                << ", tail crossing " << rep.tail_estimate << '\n';
      for (auto& f : rep.flags) flags.push_back(f);
      return report_flags(flags);
    }

    if (*pipe) {
      ExperimentConfig c = com.config.empty() ? ExperimentConfig{} : load_config(com.config);
      for (const auto& kv : sets) apply_override(c, kv);
      if (!com.out.empty()) c.out = com.out;
      if (com.seed) c.seed = com.seed;
      if (pipe->count("--budget")) c.budget = com.budget;
      auto m = run_pipeline(c);
      std::cout << "config " << m.config_hash << "\nprediction " << m.dimension.prediction
                << "\nestimate " << m.dimension.estimate << "\nmanifest "
                << (std::filesystem::path(c.out) / "manifest.json").string() << '\n';
      return report_flags(m.warnings);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
