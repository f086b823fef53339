// Command-line pipeline: thin adapters from parsed flags to the library
// modules, deterministic report emission, and file formats for instances,
// codes, fields, strategies and transcripts.
#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hardnash/arena2p.hpp"
#include "hardnash/arenanp.hpp"
#include "hardnash/brouwer.hpp"
#include "hardnash/codec.hpp"
#include "hardnash/commsim.hpp"
#include "hardnash/lineworld.hpp"
#include "hardnash/report.hpp"

namespace hardnash {

struct RunConfig {
  int n = 1;
  std::string kind = "EOTL";
  std::uint64_t seed = 7;
  int M = 16;
  std::string profile = "demo";
  double h = 0.01;
  double delta = 1e-6;
  double eps = 0;           // 0: largest eps with 3/eps integral and eps <= delta/4
  double code_target = 0;   // 0: auto per message width
  std::int64_t np_q = 12;   // population grid for the n-player game
  double np_eps_bar = 1e-9;
  std::string out_dir = "out";
  std::string in_file;       // instance file for validate/…
  std::string profile_file;  // strategy/profile file for the verify commands
  std::string mode = "exact";
  double eps_prime = 0.0;
  int comm_points = 64;

  std::vector<std::pair<std::string, std::string>> echo() const {
    return {{"n", std::to_string(n)},
            {"kind", kind},
            {"seed", std::to_string(seed)},
            {"M", std::to_string(M)},
            {"profile", profile},
            {"h", fmt_double(h)},
            {"delta", fmt_double(delta)},
            {"eps", fmt_double(eps)},
            {"code_target", fmt_double(code_target)},
            {"np_q", std::to_string(np_q)}};
  }
};

inline double auto_code_target(int kappa) {
  if (kappa <= 4) return 0.5;
  if (kappa <= 8) return 0.25;
  return 0.2;
}

// Everything the pipeline stages share, built lazily per config.
struct Pipeline {
  RunConfig cfg;
  std::optional<LineInstance> instance;
  std::optional<BinaryCode> code;
  std::optional<BrouwerField> field;
  std::optional<SimEoalInput> split;

  explicit Pipeline(RunConfig c) : cfg(std::move(c)) {}

  const LineInstance& get_instance() {
    if (!instance) {
      if (!cfg.in_file.empty()) {
        std::ifstream in(cfg.in_file);
        if (!in) throw std::invalid_argument("cannot open instance file " + cfg.in_file);
        std::stringstream ss;
        ss << in.rdbuf();
        instance = deserialize_instance(ss.str());
      } else {
        instance = gen_instance(kind_from_name(cfg.kind), cfg.n, cfg.seed);
      }
    }
    return *instance;
  }

  GeometryParams params() const {
    GeometryParams p;
    p.h = cfg.h;
    p.delta = cfg.delta > 0 ? cfg.delta : cfg.h * cfg.h * cfg.h;
    p.profile = cfg.profile == "strict" ? Profile::strict : Profile::demo;
    return p;
  }

  GridSpec grid() const {
    if (cfg.eps > 0) return GridSpec::from_eps(cfg.eps);
    return grid_for_delta(params().delta);
  }

  const BinaryCode& get_code() {
    if (!code) {
      int kappa = packed_width(get_instance().n);
      double target = cfg.code_target > 0 ? cfg.code_target : auto_code_target(kappa);
      code = build_code(kappa, target, cfg.seed ^ 0xecc);
    }
    return *code;
  }

  const BrouwerField& get_field() {
    if (!field) field = build_field(get_instance(), get_code(), params(), grid());
    return *field;
  }

  const SimEoalInput& get_split() {
    if (!split) split = split_instance(get_instance(), cfg.M, cfg.seed ^ 0x5e1);
    return *split;
  }
};

namespace cli_detail {

inline void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/" + name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
  out << text;
}

inline void echo_config(Report& rep, const RunConfig& cfg) {
  for (const auto& [k, v] : cfg.echo()) rep.config_kv(k, v);
}

inline std::string solution_summary(const LineInstance& inst) {
  std::string s;
  for (const auto& [v, role] : inst.solution_list) {
    if (!s.empty()) s += ",";
    s += packed_bits(v, inst.n).to_hex();
    s += role == Role::end ? ":end" : ":start";
  }
  return s;
}

}  // namespace cli_detail

// --- pipeline stages; each appends checks to a report ---------------------------

inline void stage_gen(Pipeline& p, Report& rep) {
  const LineInstance& inst = p.get_instance();
  Report sub = validate_instance(inst);
  for (auto& c : sub.checks) rep.add(c);
  rep.config_kv("solutions", cli_detail::solution_summary(inst));
  rep.bump("walk_edges", inst.total_edges());
  cli_detail::write_file(p.cfg.out_dir, "instance.json", serialize_instance(inst));
}

inline void stage_embed(Pipeline& p, Report& rep) {
  const BrouwerField& f = p.get_field();
  rep.add(CheckEntry::num("code-rel-dist", f.code.rel_dist(),
                          p.cfg.code_target > 0 ? p.cfg.code_target
                                                : auto_code_target(f.code.kappa),
                          f.code.rel_dist() >= (p.cfg.code_target > 0
                                                    ? p.cfg.code_target
                                                    : auto_code_target(f.code.kappa))));
  std::size_t want = 1;
  for (std::size_t li = 0; li < f.instance->lines.size(); ++li)
    want += 4 * (f.instance->lines[li].size() - 1);
  rep.add(CheckEntry::num("segment-count", double(f.segments.size()), double(want),
                          f.segments.size() == want));
  rep.bump("segments", f.segments.size());
  rep.bump("dimension", std::uint64_t(f.dim));

  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["m"] = f.m;
  j["h"] = f.params.h;
  j["delta"] = f.params.delta;
  j["code"] = nlohmann::json::parse(serialize_code(f.code));
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : f.segments)
    segs.push_back({{"a", s.a}, {"b", s.b}, {"descent", s.descent}, {"edge", s.edge}});
  j["segments"] = std::move(segs);
  cli_detail::write_file(p.cfg.out_dir, "field.json", j.dump(2) + "\n");
}

inline void stage_geometry(Pipeline& p, Report& rep) {
  const BrouwerField& f = p.get_field();
  Report sub = validate_geometry(f);
  for (auto& c : sub.checks) {
    // Advisory check in the demo profile: reported, not gating.
    if (f.params.profile == Profile::demo && c.name == "codeword-separation" && !c.pass)
      c.pass = true, c.note = "advisory-fail-in-demo measured=" + c.measured;
    rep.add(c);
  }
}

inline void stage_follow(Pipeline& p, Report& rep) {
  const BrouwerField& f = p.get_field();
  FollowResult fr = follow_path(f, f.params.h / 4, f.params.delta / 10);
  rep.add(CheckEntry::num("follow-residual", fr.residual, f.params.delta / 10, fr.converged));
  std::uint64_t dv = decode_point_tuple(fr.point, Tuple::first, f.code).msg.to_uint();
  Vertex v = unpack_id(dv, f.instance->n);
  bool is_solution = false;
  for (const auto& [s, role] : f.instance->solution_list)
    if (s == v) is_solution = true;
  rep.add(CheckEntry::flag("follow-decodes-to-solution", is_solution,
                           packed_bits(v, f.instance->n).to_hex()));
  rep.bump("follow_steps", fr.steps);

  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["residual"] = fr.residual;
  j["steps"] = fr.steps;
  j["point"] = fr.point;
  cli_detail::write_file(p.cfg.out_dir, "fixed-point.json", j.dump(2) + "\n");
}

inline void stage_game2p_candidate(Pipeline& p, Report& rep) {
  GameHandle2P g = make_game2p(p.get_field(), p.get_split());
  Candidate2P cand = candidate_equilibrium(g);
  Report ver = verify_equilibrium(g, cand.alice, cand.bob, VerifyMode2P::exact);
  for (auto& c : ver.checks) rep.add(c);
  rep.add(CheckEntry::flag("candidate-decodes-to-solution",
                           decodes_to_solution(g, cand.decoded_vertex)));
  bool round_fixed = true;
  Point fx = eval_f(*g.field, cand.x);
  for (int i = 0; i < g.dim(); ++i)
    if (g.grid.round_index(fx[i]) != g.grid.round_index(cand.x[i])) round_fixed = false;
  rep.add(CheckEntry::flag("candidate-rounding-fixed-point", round_fixed));
  cli_detail::write_file(p.cfg.out_dir, "profile2p.json",
                         serialize_profile2p(cand.alice, cand.bob));
}

inline void stage_game2p_verify(Pipeline& p, Report& rep, const std::string& file) {
  GameHandle2P g = make_game2p(p.get_field(), p.get_split());
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open profile file " + file);
  std::stringstream ss;
  ss << in.rdbuf();
  auto [A, B] = deserialize_profile2p(ss.str());
  VerifyMode2P mode = p.cfg.mode == "ane"    ? VerifyMode2P::ane
                      : p.cfg.mode == "wsne" ? VerifyMode2P::wsne
                                             : VerifyMode2P::exact;
  Report ver = verify_equilibrium(g, A, B, mode, p.cfg.eps_prime);
  for (auto& c : ver.checks) rep.add(c);
}

inline GameHandleNP make_np(Pipeline& p) {
  return make_gamenp(p.get_field(), p.get_split(), GridSpec{p.cfg.np_q}, p.cfg.seed ^ 0x0eb);
}

inline ProfileNP np_lift_candidate(Pipeline& p, const GameHandleNP& gnp) {
  GameHandle2P g2 = make_game2p(p.get_field(), p.get_split());
  Candidate2P cand = candidate_equilibrium(g2);
  // Re-anchor the fine-grid point on the population grid.
  AliceAction a = cand.alice.atoms[0].first;
  BobAction b = cand.bob.atoms[0].first;
  std::vector<std::int64_t> coarse(g2.dim());
  for (int i = 0; i < g2.dim(); ++i) coarse[i] = gnp.grid.round_index(cand.x[i]);
  a.x_idx = coarse;
  b.y_idx = coarse;
  return lift_profile(gnp, a, b);
}

inline void stage_gamenp_lift(Pipeline& p, Report& rep) {
  GameHandleNP gnp = make_np(p);
  ProfileNP prof = np_lift_candidate(p, gnp);
  WeakNashStats st = weaknash_stats_pure(gnp, prof, p.cfg.np_eps_bar);
  rep.add(CheckEntry::num("lifted-max-regret", st.max_regret, 0.0, st.max_regret == 0.0));
  rep.add(CheckEntry::num("lifted-violating-fraction", st.violating_fraction, p.cfg.np_eps_bar,
                          st.violating_fraction <= p.cfg.np_eps_bar));
  rep.bump("np_players", std::uint64_t(gnp.total_players()));
  cli_detail::write_file(p.cfg.out_dir, "profilenp.json", serialize_profile_np(gnp, prof));
}

inline void stage_gamenp_verify(Pipeline& p, Report& rep, const std::string& file) {
  GameHandleNP gnp = make_np(p);
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open profile file " + file);
  std::stringstream ss;
  ss << in.rdbuf();
  ProfileNP prof = deserialize_profile_np(gnp, ss.str());
  Report ver = verify_weaknash(gnp, prof, p.cfg.np_eps_bar);
  for (auto& c : ver.checks) rep.add(c);
}

inline void stage_comm(Pipeline& p, Report& rep) {
  const SimEoalInput& split = p.get_split();
  const BrouwerField& f = p.get_field();
  const LineInstance& inst = p.get_instance();

  // Composition holds at every vertex (also re-checked inside split_instance).
  bool eq8 = true;
  for (std::uint64_t vid = 0; vid < id_space(inst.n); ++vid) {
    BetaTriple b = split.beta.at(vid);
    LineInfo got{split.alpha.at(vid).t[b.t], split.alpha.at(vid).s[b.s],
                 split.alpha.at(vid).p[b.p]};
    if (got != inst.info(unpack_id(vid, inst.n))) eq8 = false;
  }
  rep.add(CheckEntry::flag("split-composition", eq8));

  const std::size_t bit_cap = 2 + 6 * std::size_t(bits_for_index(split.M)) + 6;
  Rng rng(p.cfg.seed ^ 0xc033);
  bool outputs_match = true;
  std::size_t max_bits = 0;
  std::string dump;
  for (int t = 0; t < p.cfg.comm_points; ++t) {
    Point x(f.dim);
    if (t % 2 == 0) {
      for (int i = 0; i < f.dim; ++i) x[i] = rng.uniform(-1.0, 2.0);
    } else {
      // Near the embedded path: a random arc position plus a small offset.
      const Segment& s = f.segments[rng.below(f.segments.size())];
      double sig = rng.uniform(0.0, s.len);
      for (int i = 0; i < f.dim; ++i)
        x[i] = std::clamp(s.a[i] + sig * s.dir[i] + rng.uniform(-2 * f.params.h, 2 * f.params.h),
                          -1.0, 2.0);
    }
    EvalfRun run = run_evalf(split, f, x);
    max_bits = std::max(max_bits, run.transcript.total_bits());
    if (run.answer != eval_f(f, x)) outputs_match = false;
    if (t < 2) dump += run.transcript.bit_string() + " total=" +
                       std::to_string(run.transcript.total_bits()) + "\n";
  }
  rep.add(CheckEntry::num("evalf-max-bits", double(max_bits), double(bit_cap),
                          max_bits <= bit_cap));
  rep.add(CheckEntry::flag("evalf-matches-eval-f", outputs_match));

  LinewalkRun lw = run_linewalk(split);
  bool answer_ok = false;
  for (const auto& [v, role] : inst.solution_list)
    if (role == Role::end && v == lw.end_vertex) answer_ok = lw.answer == first_bit(v.v1);
  rep.add(CheckEntry::flag("linewalk-answer-matches-solutions", answer_ok));
  std::size_t per_vertex = 3 * std::size_t(bits_for_index(split.M)) + 3;
  rep.add(CheckEntry::num("linewalk-total-bits", double(lw.transcript.total_bits()),
                          double(per_vertex * lw.vertices_visited),
                          lw.transcript.total_bits() == per_vertex * lw.vertices_visited));
  rep.bump("linewalk_vertices", lw.vertices_visited);
  rep.bump("linewalk_bits", lw.transcript.total_bits());
  dump += "linewalk total=" + std::to_string(lw.transcript.total_bits()) + "\n";
  cli_detail::write_file(p.cfg.out_dir, "transcripts.txt", dump);
}

// --- command driver ------------------------------------------------------------

inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"end-of-line embedding and equilibrium pipeline"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_file;

  auto add_common = [&](CLI::App* sub) {
    sub->set_help_flag("--help", "print help");
    sub->add_option("--n", cfg.n, "size parameter");
    sub->add_option("--kind", cfg.kind, "instance kind: EOTL|X|Y|Z");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--M", cfg.M, "index space size");
    sub->add_option("--profile", cfg.profile, "geometry profile: demo|strict");
    sub->add_option("--h", cfg.h, "corner/tube scale");
    sub->add_option("--delta", cfg.delta, "displacement magnitude (0: h^3)");
    sub->add_option("--eps", cfg.eps, "grid step (0: derived from delta)");
    sub->add_option("--code-target", cfg.code_target, "code relative distance target (0: auto)");
    sub->add_option("--np-q", cfg.np_q, "population grid 3/eps for the n-player game");
    sub->add_option("--np-eps-bar", cfg.np_eps_bar, "weak equilibrium threshold");
    sub->add_option("--comm-points", cfg.comm_points, "sampled points for comm-run");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--in", cfg.in_file, "input instance file");
    sub->add_option("--config", config_file, "JSON config overriding flags");
  };

  std::vector<std::string> names = {"gen",     "validate",          "embed",
                                    "geometry", "fp-follow",        "game2p-candidate",
                                    "game2p-verify", "gamenp-lift", "gamenp-verify",
                                    "comm-run", "all"};
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub);
    if (name == "game2p-verify" || name == "gamenp-verify") {
      sub->add_option("--strategy", cfg.profile_file, "profile file to verify")->required();
      sub->add_option("--mode", cfg.mode, "exact|ane|wsne");
      sub->add_option("--eps-prime", cfg.eps_prime, "numeric regret threshold");
    }
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  if (!config_file.empty()) {
    // Config file overrides flags.
    std::ifstream in(config_file);
    if (!in) {
      err << "bad config: cannot open " << config_file << "\n";
      return 2;
    }
    try {
      nlohmann::json j;
      in >> j;
      if (j.contains("n")) cfg.n = j["n"].get<int>();
      if (j.contains("kind")) cfg.kind = j["kind"].get<std::string>();
      if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("M")) cfg.M = j["M"].get<int>();
      if (j.contains("profile")) cfg.profile = j["profile"].get<std::string>();
      if (j.contains("h")) cfg.h = j["h"].get<double>();
      if (j.contains("delta")) cfg.delta = j["delta"].get<double>();
      if (j.contains("eps")) cfg.eps = j["eps"].get<double>();
      if (j.contains("code_target")) cfg.code_target = j["code_target"].get<double>();
      if (j.contains("np_q")) cfg.np_q = j["np_q"].get<std::int64_t>();
      if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    } catch (const std::exception& e) {
      err << "bad config: " << e.what() << "\n";
      return 2;
    }
  }

  std::string command;
  for (const auto& name : names)
    if (app.got_subcommand(name)) command = name;

  Report rep;
  rep.command = command;
  cli_detail::echo_config(rep, cfg);
  Pipeline pipe(cfg);

  try {
    if (command == "gen") {
      stage_gen(pipe, rep);
    } else if (command == "validate") {
      Report sub = validate_instance(pipe.get_instance());
      for (auto& c : sub.checks) rep.add(c);
    } else if (command == "embed") {
      stage_embed(pipe, rep);
    } else if (command == "geometry") {
      stage_geometry(pipe, rep);
    } else if (command == "fp-follow") {
      stage_follow(pipe, rep);
    } else if (command == "game2p-candidate") {
      stage_game2p_candidate(pipe, rep);
    } else if (command == "game2p-verify") {
      stage_game2p_verify(pipe, rep, cfg.profile_file);
    } else if (command == "gamenp-lift") {
      stage_gamenp_lift(pipe, rep);
    } else if (command == "gamenp-verify") {
      stage_gamenp_verify(pipe, rep, cfg.profile_file);
    } else if (command == "comm-run") {
      stage_comm(pipe, rep);
    } else if (command == "all") {
      stage_gen(pipe, rep);
      stage_embed(pipe, rep);
      stage_geometry(pipe, rep);
      stage_follow(pipe, rep);
      stage_game2p_candidate(pipe, rep);
      stage_gamenp_lift(pipe, rep);
      stage_comm(pipe, rep);
    }
  } catch (const NoAdmissiblePermutation& e) {
    err << "bad config: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "bad config: " << e.what() << "\n";
    return 2;
  } catch (const ConstructionFailed& e) {
    err << "bad config: " << e.what() << "\n";
    return 2;
  } catch (const NotFound& e) {
    rep.add(CheckEntry::flag("run-completed", false, e.what()));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::string text = rep.render();
  cli_detail::write_file(cfg.out_dir, "report-" + command + ".txt", text);
  out << text;
  return rep.all_pass() ? 0 : 1;
}

}  // namespace hardnash
