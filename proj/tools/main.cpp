// Command-line front end: axiom checks, linear discretization, order
// studies, open-loop simulation, and the closed-loop tracking run.
//
// Exit codes: 0 success, 1 domain/singularity (incl. I/O), 2 convergence,
// 3 argument errors.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <flatdisc/flatdisc.hpp>

namespace {

using flatdisc::Mat;
using flatdisc::Vec;

std::string g12(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::vector<double> parse_csv_doubles(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": cannot parse '" + item +
                                  "' as a number");
    }
  }
  if (values.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty list");
  }
  return values;
}

Vec parse_vec(const std::string& text, int expected, const char* what) {
  const std::vector<double> values = parse_csv_doubles(text, what);
  if (static_cast<int>(values.size()) != expected) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) +
                                " comma-separated values, got " +
                                std::to_string(values.size()));
  }
  return Eigen::Map<const Vec>(values.data(), expected);
}

Mat parse_mat(const std::string& text, int rows, int cols, const char* what) {
  const std::vector<double> values = parse_csv_doubles(text, what);
  if (static_cast<int>(values.size()) != rows * cols) {
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(rows * cols) + " values (row-major " +
                                std::to_string(rows) + "x" + std::to_string(cols) + ")");
  }
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = values[static_cast<std::size_t>(r * cols + c)];
    }
  }
  return m;
}

void require_known_system(const std::string& system) {
  if (system != "paper-quad") {
    throw std::invalid_argument("unknown system '" + system +
                                "' (registered systems: paper-quad)");
  }
}

void print_matrix(const char* label, const Mat& m) {
  std::cout << label << "=\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::cout << (c ? " " : "") << g12(m(r, c));
    }
    std::cout << "\n";
  }
}

/// Builds the (x, nu) sample tube used by check-map: base points in a box
/// around the demo operating point, tangent vectors with |nu|_inf <= 0.1.
std::vector<flatdisc::TangentVector> sample_tube(const Vec& center, double base_radius,
                                                 double nu_radius, int count,
                                                 std::uint64_t seed) {
  flatdisc::SplitMix64 rng(seed);
  std::vector<flatdisc::TangentVector> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Vec base = rng.in_box(center, base_radius);
    Vec nu = rng.in_box(Vec::Zero(center.size()), nu_radius);
    samples.push_back(flatdisc::TangentVector{std::move(base), std::move(nu)});
  }
  return samples;
}

struct CheckMapOptions {
  std::string map = "alpha:0";
  int samples = 1000;
  std::uint64_t seed = 0;
  std::string system = "paper-quad";
};

int run_check_map(const CheckMapOptions& opt) {
  if (opt.samples < 1) {
    throw std::invalid_argument("check-map: --samples must be >= 1");
  }
  require_known_system(opt.system);
  const auto sys = flatdisc::quad::make_system();
  flatdisc::DiscretizationMap map;
  if (opt.map.rfind("alpha:", 0) == 0) {
    map = flatdisc::alpha_map(std::stod(opt.map.substr(6)), 5);
  } else if (opt.map == "lifted") {
    map = flatdisc::lift_map(flatdisc::alpha_map(0.0, 5), sys.phi);
  } else if (opt.map.rfind("lifted:", 0) == 0) {
    map = flatdisc::lift_map(flatdisc::alpha_map(std::stod(opt.map.substr(7)), 5), sys.phi);
  } else {
    throw std::invalid_argument("check-map: --map must be alpha:<a>, lifted, or lifted:<a>");
  }
  const auto demo = flatdisc::quad::demo_scenario();
  const auto report =
      flatdisc::check_axioms(map, sample_tube(demo.initial_state, 0.1, 0.1, opt.samples,
                                              opt.seed));
  std::cout << "map=" << map.kind.description << "\n"
            << "samples=" << report.samples_tested << "\n"
            << "seed=" << opt.seed << "\n"
            << "max_identity_defect=" << g12(report.max_identity_defect) << "\n"
            << "max_tangency_defect=" << g12(report.max_tangency_defect) << "\n"
            << "max_roundtrip_defect=" << g12(report.max_roundtrip_defect) << "\n"
            << "pass=" << (report.pass ? "true" : "false") << "\n";
  return 0;
}

struct DiscretizeOptions {
  double alpha = 0.0;
  double h = 0.05;
  std::string system = "paper-quad";
};

int run_discretize(const DiscretizeOptions& opt) {
  require_known_system(opt.system);
  const auto sys = flatdisc::quad::make_system();
  const auto lind = flatdisc::discretize_linear(flatdisc::alpha_map(opt.alpha, 5),
                                                sys.normal_form, opt.h);
  std::cout << "alpha=" << g12(opt.alpha) << "\n"
            << "h=" << g12(opt.h) << "\n";
  print_matrix("A_h", lind.a_h);
  print_matrix("B_h", lind.b_h);
  return 0;
}

struct OrderStudyOptions {
  std::string scheme = "lifted";
  std::string h_list = "0.05,0.025,0.0125,0.00625";
  std::string point = "0.5,0.2,0.1,0.2,0";
  double alpha = 0.0;
  std::uint64_t seed = 0;  // accepted for interface stability; the study is deterministic
  std::string system = "paper-quad";
};

int run_order_study(const OrderStudyOptions& opt) {
  require_known_system(opt.system);
  const auto sys = flatdisc::quad::make_system();
  std::vector<double> h_list = parse_csv_doubles(opt.h_list, "order-study --h");
  const Vec xi = parse_vec(opt.point, 5, "order-study --point");
  const Vec v = Vec::Zero(2);
  const double h0 = h_list.front();
  flatdisc::DiscreteScheme scheme;
  if (opt.scheme == "lifted") {
    const auto lind = flatdisc::discretize_linear(flatdisc::alpha_map(opt.alpha, 5),
                                                  sys.normal_form, h0);
    scheme = flatdisc::build_lifted_stepper(sys.phi, lind);
  } else if (opt.scheme == "generic") {
    scheme = flatdisc::build_generic_stepper(
        flatdisc::lift_map(flatdisc::alpha_map(opt.alpha, 5), sys.phi), sys.extended, h0);
  } else if (opt.scheme == "euler") {
    scheme = flatdisc::build_generic_stepper(flatdisc::alpha_map(0.0, 5), sys.extended, h0);
  } else {
    throw std::invalid_argument("order-study: --scheme must be lifted, generic, or euler");
  }
  const auto study = flatdisc::measure_order(scheme, sys.extended, nullptr, xi, v, h_list);
  std::cout << "scheme=" << opt.scheme << "\n";
  for (std::size_t i = 0; i < study.samples.size(); ++i) {
    std::cout << "h=" << g12(study.samples[i].h) << " error=" << g12(study.samples[i].error)
              << " ratio=";
    if (i == 0 || study.samples[i].error == 0.0) {
      std::cout << "-";
    } else {
      std::cout << g12(study.samples[i - 1].error / study.samples[i].error);
    }
    std::cout << "\n";
  }
  if (study.exact) {
    std::cout << "slope=exact\n";
  } else {
    std::cout << "slope=" << g12(study.slope) << "\n";
  }
  return 0;
}

struct RunOptions {
  double h = 0.05;
  double horizon = 10.0;
  double alpha = 0.0;
  int reset_cycles = 20;
  bool reset_full = false;
  std::uint64_t seed = 0;
  std::string out;
  std::string system = "paper-quad";
  std::string gain;  // row-major 2x5 CSV; empty = demo gain
  bool open_loop = false;
};

int run_loop(const RunOptions& opt) {
  require_known_system(opt.system);
  const auto sys = flatdisc::quad::make_system();
  const auto demo = flatdisc::quad::demo_scenario();

  flatdisc::SimConfig cfg;
  cfg.h = opt.h;
  cfg.horizon = opt.horizon;
  cfg.initial_state = demo.initial_state;
  cfg.reset_period_cycles = opt.reset_cycles;
  cfg.reset_full = opt.reset_full;
  cfg.seed = opt.seed;
  cfg.output_path = opt.out;

  flatdisc::TrackingLaw law;
  law.lind = flatdisc::discretize_linear(flatdisc::alpha_map(opt.alpha, 5), sys.normal_form,
                                         opt.h);
  law.gain = opt.open_loop ? Mat(Mat::Zero(2, 5))
                           : (opt.gain.empty() ? demo.gain
                                               : parse_mat(opt.gain, 2, 5, "--k"));
  law.reference = flatdisc::FlatReference::sample(demo.reference1, demo.reference2, opt.h,
                                                  opt.horizon);

  const auto scheme = flatdisc::build_lifted_stepper(sys.phi, law.lind);

  const auto spectrum = flatdisc::closed_loop_spectrum(law.lind.a_h, law.lind.b_h, law.gain);
  std::cout << "spectrum=";
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    std::cout << (i ? " " : "") << g12(spectrum[i].real()) << (spectrum[i].imag() < 0 ? "-" : "+")
              << g12(std::abs(spectrum[i].imag())) << "j";
  }
  std::cout << "\nspectral_radius=" << g12(flatdisc::spectral_radius(spectrum)) << "\n";

  const auto rows = flatdisc::run_closed_loop(cfg, scheme, law, sys);
  double max_rel = 0.0, max_e1 = 0.0, max_e4 = 0.0;
  for (const auto& row : rows) {
    std::cout << "t=" << g12(row.t) << " rel_err=" << g12(row.rel_err)
              << " ez1=" << g12(row.z1 - row.z1_star) << " ez4=" << g12(row.z4 - row.z4_star)
              << "\n";
    max_rel = std::max(max_rel, row.rel_err);
    max_e1 = std::max(max_e1, std::abs(row.z1 - row.z1_star));
    max_e4 = std::max(max_e4, std::abs(row.z4 - row.z4_star));
  }
  std::cout << "rows=" << rows.size() << "\n"
            << "max_rel_err=" << g12(max_rel) << "\n"
            << "max_ez1=" << g12(max_e1) << "\n"
            << "max_ez4=" << g12(max_e4) << "\n";
  if (!opt.out.empty()) {
    std::cout << "trace=" << opt.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flatness-preserving discretization schemes: map checks, discretization, "
               "order studies, and closed-loop tracking"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key = value file (flags override)");

  CheckMapOptions cm;
  auto* cmd_check = app.add_subcommand("check-map", "Verify the defining axioms of a "
                                                    "discretization map on seeded samples");
  cmd_check->add_option("--map", cm.map, "alpha:<a>, lifted, or lifted:<a>")
      ->capture_default_str();
  cmd_check->add_option("--samples", cm.samples, "Sample count")->capture_default_str();
  cmd_check->add_option("--seed", cm.seed, "Sample seed")->capture_default_str();
  cmd_check->add_option("--system", cm.system, "System registry name")->capture_default_str();

  DiscretizeOptions dz;
  auto* cmd_disc = app.add_subcommand("discretize", "Print A_h, B_h of the linear normal form "
                                                    "under an alpha-family map");
  cmd_disc->add_option("--alpha", dz.alpha, "Family parameter in [0,1]")->capture_default_str();
  cmd_disc->add_option("--h", dz.h, "Stepsize")->capture_default_str();
  cmd_disc->add_option("--system", dz.system, "System registry name")->capture_default_str();

  OrderStudyOptions os;
  auto* cmd_order = app.add_subcommand("order-study", "Normalized local error vs stepsize and "
                                                      "the fitted convergence order");
  cmd_order->add_option("--scheme", os.scheme, "lifted, generic, or euler")
      ->capture_default_str();
  cmd_order->add_option("--h", os.h_list, "Comma-separated stepsizes (>= 3)")
      ->capture_default_str();
  cmd_order->add_option("--point", os.point, "Evaluation state (5 CSV values)")
      ->capture_default_str();
  cmd_order->add_option("--alpha", os.alpha, "Family parameter of the underlying map")
      ->capture_default_str();
  cmd_order->add_option("--seed", os.seed, "Reserved; the study is deterministic")
      ->capture_default_str();
  cmd_order->add_option("--system", os.system, "System registry name")->capture_default_str();

  RunOptions sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Open-loop run: scheme under the nominal "
                                                 "flat input vs the truth plant");
  RunOptions trk;
  auto* cmd_track = app.add_subcommand("track", "Closed-loop tracking run against the truth "
                                                "plant with periodic reset");
  for (auto [cmd, opt] : {std::pair{cmd_sim, &sim}, std::pair{cmd_track, &trk}}) {
    cmd->add_option("--h", opt->h, "Controller cycle (s)")->capture_default_str();
    cmd->add_option("--horizon", opt->horizon, "Total time (s)")->capture_default_str();
    cmd->add_option("--alpha", opt->alpha, "Family parameter of the scheme's map")
        ->capture_default_str();
    cmd->add_option("--seed", opt->seed, "Recorded in the config; loop is deterministic")
        ->capture_default_str();
    cmd->add_option("--out", opt->out, "CSV trace path");
    cmd->add_option("--system", opt->system, "System registry name")->capture_default_str();
  }
  // simulate: no feedback, and by default no reset (pure scheme-vs-truth drift)
  sim.open_loop = true;
  sim.reset_cycles = 1 << 30;
  cmd_sim->add_option("--reset-cycles", sim.reset_cycles,
                      "Model reset period in cycles (default: never)");
  cmd_track->add_option("--reset-cycles", trk.reset_cycles, "Model reset period in cycles")
      ->capture_default_str();
  cmd_track->add_flag("--reset-full", trk.reset_full,
                      "Reset the compensator state y along with x");
  cmd_track->add_option("--k", trk.gain, "Feedback gain, row-major 2x5 CSV (default: demo gain)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (cmd_check->parsed()) return run_check_map(cm);
    if (cmd_disc->parsed()) return run_discretize(dz);
    if (cmd_order->parsed()) return run_order_study(os);
    if (cmd_sim->parsed()) return run_loop(sim);
    if (cmd_track->parsed()) return run_loop(trk);
  } catch (const flatdisc::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const flatdisc::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const flatdisc::SingularityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const flatdisc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
