#include "qmrdx/cli.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qmrdx/eval.hpp"
#include "qmrdx/network_io.hpp"
#include "qmrdx/service.hpp"
#include "qmrdx/session.hpp"
#include "qmrdx/simulator.hpp"

namespace qmrdx {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliConfig {
  std::string net_path;
  std::string format = "auto";
  double threshold = 0.01;
  int max_steps = 20;
  int depth = 1;
  std::string utility = "kl";
  std::size_t top_k = 5;
  std::size_t n_cases = 1000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string output;
  bool check = false;
  std::string init_rule = "uniform";

  // evaluate
  bool cheater = false;
  bool pretty = false;
  std::string dialogue_path;
  std::string unrecorded = "absent";
  // grid
  std::vector<double> thresholds{0.01, 0.05, 0.10};
  std::vector<int> budgets{10, 15, 20};
  // diagnose
  std::vector<std::string> init;
  std::string transcript_path;
  // build-net
  std::string cases_path;
  std::string prior_mode = "uniform";
  // serve
  std::string addr = "127.0.0.1:8080";
  bool cors = false;
  std::string static_dir;
  std::string transcript_dir;
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

SessionConfig session_config(const CliConfig& c) {
  SessionConfig cfg;
  cfg.utility_threshold = c.threshold;
  cfg.max_steps = c.max_steps;
  cfg.lookahead.depth = c.depth;
  cfg.lookahead.kind = parse_utility_kind(c.utility);
  cfg.top_k = c.top_k;
  return cfg;
}

QmrNetwork load(const CliConfig& c, std::ostream& err) {
  auto net = load_network(c.net_path, parse_network_format(c.format));
  err << "qmrdx: loaded " << c.net_path << " (" << net.num_diseases() << " diseases, "
      << net.num_findings() << " findings)\n";
  return net;
}

// Writes to --output when given, else to `out`.
void emit(const CliConfig& c, std::ostream& out, const std::string& text) {
  if (c.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.output, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + c.output);
  f << text;
}

int finish_reports(const CliConfig& c, std::ostream& out, std::ostream& err,
                   const std::vector<EvalReport>& reports) {
  emit(c, out, c.pretty ? reports_to_table(reports) : reports_to_csv(reports));
  if (!c.check) return kExitOk;
  const auto problems = check_reports(reports);
  for (const auto& p : problems) err << "qmrdx: check failed: " << p << "\n";
  return problems.empty() ? kExitOk : kExitCheck;
}

int cmd_validate(const CliConfig& c, std::ostream& out, std::ostream& err) {
  QmrNetwork net = [&] {
    try {
      return load_network(c.net_path, parse_network_format(c.format));
    } catch (const ValidationError& e) {
      for (const auto& v : e.violations()) err << "qmrdx: " << v << "\n";
      throw;
    }
  }();
  const auto st = network_stats(net);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "diseases %zu\nfindings %zu\nedges %zu\nconnected_findings %zu\n"
                "findings_per_disease %.3f\ndiseases_per_finding %.3f\n",
                st.diseases, st.findings, st.edges, st.connected_findings,
                st.findings_per_disease, st.diseases_per_finding);
  emit(c, out, buf);
  return kExitOk;
}

int cmd_simulate(const CliConfig& c, std::ostream& out, std::ostream& err) {
  const auto net = load(c, err);
  const auto cases = sample_cohort(net, c.n_cases, c.seed, parse_initial_rule(c.init_rule));
  emit(c, out, cases_to_json(net, cases));
  return kExitOk;
}

int cmd_evaluate(const CliConfig& c, std::ostream& out, std::ostream& err) {
  const auto net = load(c, err);
  const auto cfg = session_config(c);
  EvalReport report;
  if (!c.dialogue_path.empty()) {
    const auto cases = load_dialogue_cases(c.dialogue_path);
    report = evaluate_dialogue(net, cases, cfg, parse_unrecorded_mode(c.unrecorded), c.workers);
    if (report.unknown_disease > 0) {
      err << "qmrdx: " << report.unknown_disease
          << " case(s) name a disease missing from the network; counted as misses\n";
    }
  } else if (c.cheater) {
    report = cheater_evaluate(net, c.n_cases, c.seed, c.workers, parse_initial_rule(c.init_rule));
    report.depth = 0;
  } else {
    report = evaluate(net, cfg, c.n_cases, c.seed, c.workers, parse_initial_rule(c.init_rule));
  }
  if (report.degenerate > 0) {
    err << "qmrdx: " << report.degenerate << " episode(s) ended with degenerate evidence\n";
  }
  return finish_reports(c, out, err, {report});
}

int cmd_grid(const CliConfig& c, std::ostream& out, std::ostream& err) {
  const auto net = load(c, err);
  LookaheadConfig la{c.depth, parse_utility_kind(c.utility)};
  for (auto t : c.thresholds) {
    if (!(t >= 0.0)) throw UsageError("thresholds must be >= 0");
  }
  for (auto m : c.budgets) {
    if (m < 0) throw UsageError("max steps must be >= 0");
  }
  const auto reports = grid_search(net, c.thresholds, c.budgets, la, c.n_cases, c.seed, c.workers,
                                   parse_initial_rule(c.init_rule));
  return finish_reports(c, out, err, reports);
}

std::string trim(std::string_view s) { return trim_name(s); }

std::optional<std::optional<bool>> parse_answer(std::string_view word) {
  const auto w = lower(trim(word));
  if (w == "y" || w == "yes") return std::optional<bool>(true);
  if (w == "n" || w == "no") return std::optional<bool>(false);
  if (w == "?" || w == "skip") return std::optional<bool>();
  return std::nullopt;
}

void print_ranking(std::ostream& out, const QmrNetwork& net, const std::vector<RankedDisease>& r) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", r[i].prob);
    out << "  " << (i + 1) << ". " << buf << "  " << net.disease(r[i].disease).name << "\n";
  }
}

int cmd_diagnose(const CliConfig& c, std::istream& in, std::ostream& out, std::ostream& err,
                 bool color) {
  const auto net = load(c, err);
  std::vector<std::string> pos, neg;
  for (const auto& item : c.init) {
    if (item.size() < 2 || (item[0] != '+' && item[0] != '-')) {
      throw UsageError("--init expects +Name or -Name, got \"" + item + "\"");
    }
    (item[0] == '+' ? pos : neg).push_back(item.substr(1));
  }
  Session s(net, session_config(c), evidence_from_names(net, pos, neg));
  const auto k = std::min(c.top_k, net.num_diseases());
  const char* on = color ? "\x1b[1m" : "";
  const char* off = color ? "\x1b[0m" : "";

  std::string line;
  while (true) {
    out << "posterior (top " << k << "):\n";
    print_ranking(out, net, top_k(s.current_posterior(), k));
    const auto d = s.next_suggestion();
    const auto* sug = std::get_if<Suggest>(&d);
    if (!sug) {
      out << "stopping: " << to_string(std::get<Diagnose>(d).reason) << "\n";
      break;
    }
    char ubuf[64];
    std::snprintf(ubuf, sizeof ubuf, "%.6f", sug->utility);
    out << "Q" << (s.step() + 1) << ": " << on << net.finding(sug->finding).name << off
        << "? (utility " << ubuf << ") [y/n/?] " << std::flush;
    if (!std::getline(in, line)) {
      out << "\n";
      break;
    }
    const auto cmd = trim(line);
    if (cmd == "!stop") break;
    if (cmd.rfind("!set", 0) == 0) {
      // !set <finding name> <y|n|?>
      const auto body = trim(std::string_view(cmd).substr(4));
      const auto sp = body.find_last_of(" \t");
      const auto value = sp == std::string::npos ? std::nullopt : parse_answer(body.substr(sp + 1));
      if (!value) {
        err << "qmrdx: usage: !set <finding> <y|n|?>\n";
        continue;
      }
      const auto name = trim(body.substr(0, sp));
      const auto f = net.find_finding(name);
      if (!f) {
        err << "qmrdx: unknown finding \"" << name << "\"\n";
        continue;
      }
      s.override_finding(*f, *value);
      continue;
    }
    const auto value = parse_answer(cmd);
    if (!value) {
      err << "qmrdx: answer y, n or ? (or !set <finding> <y|n|?>, !stop)\n";
      continue;
    }
    s.answer(sug->finding, *value);
  }

  const auto& diag = s.finalize();
  out << "diagnosis (" << to_string(diag.reason) << ", " << s.step() << " step"
      << (s.step() == 1 ? "" : "s") << "):\n";
  print_ranking(out, net, diag.ranking);
  if (diag.posterior.degenerate) err << "qmrdx: evidence is impossible under the network; ranking uses priors\n";
  if (!c.transcript_path.empty()) {
    std::ofstream f(c.transcript_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + c.transcript_path);
    f << to_jsonl(net, s.transcript());
  }
  return kExitOk;
}

int cmd_build_net(const CliConfig& c, std::ostream& out, std::ostream& err) {
  const auto cases = load_dialogue_cases(c.cases_path);
  const auto built = build_network_from_cases(cases, parse_prior_mode(c.prior_mode));
  for (const auto& w : built.warnings) err << "qmrdx: warning: " << w << "\n";
  err << "qmrdx: built network from " << cases.size() << " cases ("
      << built.network.num_diseases() << " diseases, " << built.network.num_findings()
      << " findings)\n";
  emit(c, out, to_native_json(built.network));
  return kExitOk;
}

int cmd_serve(const CliConfig& c, std::ostream& err) {
  const auto net = load(c, err);
  ServiceOptions opts;
  try {
    std::tie(opts.host, opts.port) = parse_addr(c.addr);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  opts.cors = c.cors;
  opts.static_dir = c.static_dir;
  opts.transcript_dir = c.transcript_dir;
  opts.defaults = session_config(c);
  err << "qmrdx: listening on " << opts.host << ":" << opts.port << "\n" << std::flush;
  if (!run_service(net, opts)) throw std::runtime_error("cannot listen on " + c.addr);
  return kExitOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err) {
  CliConfig c;
  CLI::App app{"Differential diagnosis over noisy-OR disease/finding networks.", "qmrdx"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  const std::vector<std::string> formats{"auto", "native", "symcat"};
  const std::vector<std::string> kinds{"kl", "ig"};
  const std::vector<std::string> rules{"uniform", "strongest"};

  auto add_net = [&](CLI::App* sub) {
    sub->add_option("--net", c.net_path, "Network file")->required()->check(CLI::ExistingFile);
    sub->add_option("--format", c.format, "Network file format")
        ->check(CLI::IsMember(formats))
        ->capture_default_str();
  };
  auto add_session = [&](CLI::App* sub, bool single_budget) {
    if (single_budget) {
      sub->add_option("--threshold", c.threshold, "Stop when the best utility is below this (nats)")
          ->check(CLI::NonNegativeNumber)
          ->capture_default_str();
      sub->add_option("--max-steps", c.max_steps, "Question budget")
          ->check(CLI::NonNegativeNumber)
          ->capture_default_str();
    }
    sub->add_option("--depth", c.depth, "Lookahead depth")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--utility", c.utility, "Utility: kl or ig")
        ->transform(CLI::IsMember(kinds, CLI::ignore_case))
        ->capture_default_str();
    sub->add_option("--top-k", c.top_k, "Diseases shown in rankings")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  auto add_cohort = [&](CLI::App* sub) {
    sub->add_option("--cases", c.n_cases, "Number of simulated cases")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    sub->add_option("--init-rule", c.init_rule, "Initial positive finding: uniform or strongest")
        ->check(CLI::IsMember(rules))
        ->capture_default_str();
  };
  auto add_eval = [&](CLI::App* sub) {
    sub->add_option("--workers", c.workers, "Worker threads (output does not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_flag("--check", c.check, "Exit 3 if a report invariant fails");
    sub->add_flag("--pretty", c.pretty, "Print a table instead of CSV");
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("-o,--output", c.output, "Write the result here instead of stdout");
  };

  auto* validate = app.add_subcommand("validate", "Check a network file and print its statistics");
  add_net(validate);
  add_output(validate);

  auto* simulate = app.add_subcommand("simulate", "Sample simulated patients as JSON");
  add_net(simulate);
  add_cohort(simulate);
  add_output(simulate);

  auto* evaluate = app.add_subcommand("evaluate", "Run the inquiry loop over a cohort, CSV report");
  add_net(evaluate);
  add_session(evaluate, true);
  add_cohort(evaluate);
  add_eval(evaluate);
  add_output(evaluate);
  evaluate->add_flag("--cheater", c.cheater, "Observe every finding (no inquiry); depth is reported as 0");
  evaluate->add_option("--dialogue", c.dialogue_path, "Evaluate on dialogue cases instead of simulating")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--unrecorded", c.unrecorded, "Answer for findings a dialogue case never recorded")
      ->check(CLI::IsMember({"absent", "skip"}))
      ->capture_default_str();

  auto* grid = app.add_subcommand("grid", "Evaluate every (threshold, max steps) pair on one cohort");
  add_net(grid);
  add_session(grid, false);
  add_cohort(grid);
  add_eval(grid);
  add_output(grid);
  grid->add_option("--thresholds", c.thresholds, "Comma-separated thresholds")
      ->delimiter(',')
      ->capture_default_str();
  grid->add_option("--max-steps", c.budgets, "Comma-separated budgets")
      ->delimiter(',')
      ->capture_default_str();

  auto* diagnose = app.add_subcommand("diagnose", "Interactive diagnosis session");
  add_net(diagnose);
  add_session(diagnose, true);
  diagnose->add_option("--init", c.init, "Initial finding, +Name or -Name (use --init=-Name); repeatable")
      ->allow_extra_args(false);
  diagnose->add_option("--transcript", c.transcript_path, "Write the session transcript (JSON lines)");

  auto* build = app.add_subcommand("build-net", "Build a network from dialogue cases");
  build->add_option("--cases", c.cases_path, "Dialogue case file")->required()->check(CLI::ExistingFile);
  build->add_option("--prior-mode", c.prior_mode, "Disease priors: uniform or empirical")
      ->check(CLI::IsMember({"uniform", "empirical"}))
      ->capture_default_str();
  add_output(build);

  auto* serve = app.add_subcommand("serve", "HTTP/JSON session service");
  add_net(serve);
  add_session(serve, true);
  serve->add_option("--addr", c.addr, "Listen address host:port")->capture_default_str();
  serve->add_flag("--cors", c.cors, "Send permissive CORS headers");
  serve->add_option("--static", c.static_dir, "Serve static files (the UI build) from here")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--transcripts", c.transcript_dir, "Persist session transcripts here")
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const bool color = std::getenv("NO_COLOR") == nullptr && &out == &std::cout && isatty(1);
  try {
    if (*validate) return cmd_validate(c, out, err);
    if (*simulate) return cmd_simulate(c, out, err);
    if (*evaluate) return cmd_evaluate(c, out, err);
    if (*grid) return cmd_grid(c, out, err);
    if (*diagnose) return cmd_diagnose(c, in, out, err, color);
    if (*build) return cmd_build_net(c, out, err);
    if (*serve) return cmd_serve(c, err);
  } catch (const UsageError& e) {
    err << "qmrdx: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "qmrdx: invalid network: " << e.what() << "\n";
    return *validate ? kExitCheck : kExitRuntime;
  } catch (const SessionError& e) {
    err << "qmrdx: " << e.what() << "\n";
    return e.kind() == SessionError::Kind::UnknownFinding ||
                   e.kind() == SessionError::Kind::InvalidEvidence
               ? kExitUsage
               : kExitRuntime;
  } catch (const std::exception& e) {
    err << "qmrdx: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace qmrdx
