// henon: command-line front end.
//
// Exit codes: 0 success, 2 budget exhausted, 3 invalid input, 4 verification failure.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "henon/io.hpp"
#include "henon/paramsweep.hpp"
#include "henon/render.hpp"

using namespace henon;

namespace {

constexpr int kOk = 0;
constexpr int kBudget = 2;
constexpr int kInvalid = 3;
constexpr int kVerify = 4;

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

Dyadic parse_number(const std::string& s, const std::string& what) {
  auto d = detail::exact_decimal(s);
  if (!d) throw InvalidInput(what + ": '" + s + "' is not an exact dyadic decimal");
  return *d;
}

EllSchedule parse_ell(const std::string& s) {
  if (s == "linear") return EllSchedule::kLinear;
  if (s == "custom") return EllSchedule::kCustom;
  throw InvalidInput("--ell-schedule must be linear or custom");
}

void say(const std::string& s) { std::cerr << s << '\n'; }

std::string summary(const HypCertificate& c, const PolyDiffeo& f) {
  std::ostringstream os;
  os << "map " << f.hash() << "\n";
  os << "status " << to_string(c.status) << "\n";
  if (!c.note.empty()) os << "note " << c.note << "\n";
  os << "N " << c.N << "  n " << c.n << "  k " << c.k << "  R " << c.R.to_string() << "\n";
  if (!c.frames.empty()) {
    os << "witness m " << c.witness.m << "  lambda " << c.witness.lambda.to_string() << "\n";
    os << "rho " << c.rho.to_string() << "\n";
    os << "gamma >= " << c.gamma.to_double_down() << "\n";
    os << "Q <= " << c.Q.to_double_up() << "\n";
    os << "Delta ";
    if (c.delta_infinite) os << "infinite\n";
    else os << c.delta.to_double_down() << "\n";
    os << "frames " << c.frames.size() << "  sink boxes " << c.attracting.size() << "  source boxes "
       << c.repelling.size() << "\n";
  }
  return os.str();
}

Json window_json(const Slice& s) {
  return Json::array({io::dy(s.lo[0]), io::dy(s.hi[0]), io::dy(s.lo[1]), io::dy(s.hi[1])});
}

// Shared flags of the two renderers.
struct SliceArgs {
  std::vector<int> plane{0, 1};
  std::vector<std::string> window;
  std::vector<int> size{256, 256};

  void add(CLI::App* c) {
    c->add_option("--plane", plane, "two coordinate indices")->expected(2);
    c->add_option("--window", window, "xmin xmax ymin ymax (exact decimals)")->expected(4);
    c->add_option("--size", size, "width height in pixels")->expected(2);
  }
  Slice slice(const Dyadic& default_half) const {
    Slice s;
    s.plane = {plane[0], plane[1]};
    if (window.empty()) {
      s.lo = {-default_half, -default_half};
      s.hi = {default_half, default_half};
    } else {
      s.lo = {parse_number(window[0], "--window"), parse_number(window[2], "--window")};
      s.hi = {parse_number(window[1], "--window"), parse_number(window[3], "--window")};
    }
    s.width = size[0];
    s.height = size[1];
    return s;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigorous Julia set approximation and hyperbolicity certification for Henon maps"};
  app.require_subcommand(1);
  std::string out_dir = output_dir();
  int threads = 1;

  // julia-approx
  auto* ja = app.add_subcommand("julia-approx", "outer approximation of the Julia set");
  std::string ja_map;
  int ja_N = 0, ja_max_n = 12, ja_max_period = 14;
  std::string ja_ell = "linear";
  std::string ja_out;
  ja->add_option("--map", ja_map, "map file")->required();
  ja->add_option("--N", ja_N, "target accuracy 2^-N")->required()->check(CLI::Range(0, 14));
  ja->add_option("--max-n", ja_max_n, "last loop index tried")->check(CLI::Range(0, 16));
  ja->add_option("--ell-schedule", ja_ell, "period schedule: linear or custom");
  ja->add_option("--max-period", ja_max_period, "hard cap on the period bound")->check(CLI::Range(1, 64));
  ja->add_option("--out", ja_out, "output directory");
  ja->add_option("--threads", threads, "worker threads (outputs do not depend on it)")->check(CLI::Range(1, 256));

  // certify-hyp
  auto* ch = app.add_subcommand("certify-hyp", "certify uniform hyperbolicity");
  std::string ch_map, ch_out;
  int ch_min_N = 0, ch_max_N = 12, ch_phase = 16, ch_max_m = 16, ch_slack = 10;
  ch->add_option("--map", ch_map, "map file")->required();
  ch->add_option("--max-N", ch_max_N, "budget: last N tried")->check(CLI::Range(0, 14));
  ch->add_option("--min-N", ch_min_N, "first N tried")->check(CLI::Range(0, 14));
  ch->add_option("--phase-samples", ch_phase, "arcs per cone boundary")->check(CLI::Range(1, 4096));
  ch->add_option("--max-m", ch_max_m, "largest witness iterate")->check(CLI::Range(1, 64));
  ch->add_option("--julia-slack", ch_slack, "loop indices tried past n'")->check(CLI::Range(0, 16));
  ch->add_option("--out", ch_out, "output directory");
  ch->add_option("--threads", threads)->check(CLI::Range(1, 256));

  // verify-cert
  auto* vc = app.add_subcommand("verify-cert", "re-check a certificate");
  std::string vc_cert;
  std::size_t vc_samples = 10000;
  std::uint64_t vc_seed = 1;
  vc->add_option("--cert", vc_cert, "certificate file")->required();
  vc->add_option("--samples", vc_samples, "Monte-Carlo samples")->required();
  vc->add_option("--seed", vc_seed, "sampling seed");

  // param-sweep
  auto* ps = app.add_subcommand("param-sweep", "enumerate certified hyperbolic balls");
  int ps_degree = 2, ps_stages = 1, ps_first = 0;
  std::string ps_log;
  std::vector<std::string> ps_center, ps_half;
  std::size_t ps_max_cells = std::numeric_limits<std::size_t>::max();
  bool ps_recover = false;
  int ps_max_bits = 40;
  ps->add_option("--degree", ps_degree, "polynomial degree")->required()->check(CLI::Range(2, 8));
  ps->add_option("--stages", ps_stages, "number of stages")->required()->check(CLI::Range(1, 32));
  ps->add_option("--resume", ps_log, "append-only log; created if missing")->required();
  ps->add_option("--first-stage", ps_first, "first stage index")->check(CLI::Range(0, 32));
  ps->add_option("--center", ps_center, "window center: 2*degree real coordinates");
  ps->add_option("--half-width", ps_half, "window half-widths: 2*degree values");
  ps->add_option("--max-cells", ps_max_cells, "budget: cells certified by this call");
  ps->add_option("--max-bits", ps_max_bits, "smallest radius probe 2^-bits")->check(CLI::Range(1, 60));
  ps->add_flag("--recover", ps_recover, "truncate a damaged log to its valid prefix");
  ps->add_option("--threads", threads)->check(CLI::Range(1, 256));

  // locus-render
  auto* lr = app.add_subcommand("locus-render", "draw certified balls in a parameter slice");
  std::string lr_log, lr_out;
  SliceArgs lr_slice;
  lr->add_option("--log", lr_log, "sweep log")->required();
  lr->add_option("--out", lr_out, "output image (PPM)");
  lr_slice.add(lr);

  // render
  auto* rd = app.add_subcommand("render", "draw a box set in a coordinate plane");
  std::string rd_boxset, rd_out;
  SliceArgs rd_slice;
  rd->add_option("--boxset", rd_boxset, "box-set file")->required();
  rd->add_option("--out", rd_out, "output image (PPM)");
  rd_slice.add(rd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*ja) {
      PolyDiffeo f = load_map(ja_map);
      JuliaOptions opt;
      opt.N = ja_N;
      opt.max_n = ja_max_n;
      opt.ell = parse_ell(ja_ell);
      opt.max_period = ja_max_period;
      opt.threads = threads;
      opt.log = say;
      Json config{{"command", "julia-approx"}, {"map", ja_map},          {"map_hash", f.hash()},
                  {"N", ja_N},                 {"max_n", ja_max_n},      {"ell_schedule", ja_ell},
                  {"max_period", ja_max_period}, {"seed", opt.seed}};
      std::string dir = ja_out.empty() ? out_dir : ja_out;
      ApproximationResult r = run_julia(f, opt);
      write_text_file(join(dir, "approximation.json"), dump(approximation_to_json(approximation_file(r), f, config)));
      for (int k = r.n_prime; k <= r.k; ++k) {
        BoxSet s;
        if (k == r.k) {
          s = BoxSet::from_model(r.model, &r.types);
        } else {
          ChainModel mk = coarsen(r.model, k, f, threads);
          auto types = type_components(mk, r.orbits);
          s = BoxSet::from_model(mk, &types);
        }
        write_text_file(join(dir, "boxset-level-" + std::to_string(k) + ".json"), dump(boxset_to_json(s, config)));
      }
      std::size_t saddle = 0, sink = 0, source = 0;
      for (const auto& t : r.types) {
        saddle += t.cls == OrbitClass::kSaddle;
        sink += t.cls == OrbitClass::kAttracting;
        source += t.cls == OrbitClass::kRepelling;
      }
      std::cout << "halted: N " << r.N << "  n " << r.n << "  k " << r.k << "  n' " << r.n_prime << "  l " << r.ell
                << "\n"
                << r.model.size() << " boxes in " << r.model.component_count << " components (" << saddle
                << " saddle, " << sink << " attracting, " << source << " repelling), " << r.orbits.size()
                << " periodic orbits\n"
                << "wrote " << join(dir, "approximation.json") << "\n";
      return kOk;
    }

    if (*ch) {
      PolyDiffeo f = load_map(ch_map);
      CertifyOptions opt;
      opt.min_N = ch_min_N;
      opt.max_N = ch_max_N;
      opt.phase_samples = ch_phase;
      opt.max_m = ch_max_m;
      opt.julia_slack = ch_slack;
      opt.threads = threads;
      opt.log = say;
      if (ch_min_N > ch_max_N) throw InvalidInput("--min-N exceeds --max-N");
      Json config{{"command", "certify-hyp"}, {"map", ch_map},         {"map_hash", f.hash()},
                  {"min_N", ch_min_N},        {"max_N", ch_max_N},     {"phase_samples", ch_phase},
                  {"julia_slack", ch_slack},  {"max_m", ch_max_m},     {"ell_schedule", "linear"},
                  {"seed", opt.seed}};
      std::string dir = ch_out.empty() ? out_dir : ch_out;
      HypCertificate partial;
      try {
        HypCertificate c = run_certifier(f, opt, &partial);
        check_certificate_arithmetic(c);
        write_text_file(join(dir, "certificate.json"), dump(certificate_to_json(c, f, config)));
        write_text_file(join(dir, "certificate.txt"), summary(c, f));
        std::cout << summary(c, f) << "wrote " << join(dir, "certificate.json") << "\n";
        return kOk;
      } catch (const BudgetExhausted& e) {
        write_text_file(join(dir, "certificate.partial.json"), dump(certificate_to_json(partial, f, config)));
        write_text_file(join(dir, "certificate.partial.txt"), summary(partial, f));
        std::cout << summary(partial, f) << "budget exhausted: " << e.what() << "\nwrote "
                  << join(dir, "certificate.partial.json") << "\n";
        return kBudget;
      }
    }

    if (*vc) {
      LoadedCertificate lc = certificate_from_json(parse_json_file(vc_cert));
      check_certificate_arithmetic(lc.cert);
      VerificationReport rep = verify_certificate(lc.cert, lc.map, vc_samples, vc_seed);
      std::cout << "arithmetic: ok\nsamples " << rep.samples << "  cone checks " << rep.cone_checks
                << "  violations " << rep.violations << "\n";
      if (rep.violations != 0) {
        std::cout << "first violation: " << rep.first_violation << "\n";
        return kVerify;
      }
      return kOk;
    }

    if (*ps) {
      SweepHeader h;
      h.degree = ps_degree;
      h.first_stage = ps_first;
      if (!ps_center.empty() || !ps_half.empty()) {
        auto dims = static_cast<std::size_t>(2 * ps_degree);
        if (ps_center.size() != dims || ps_half.size() != dims)
          throw InvalidInput("--center and --half-width need " + std::to_string(dims) + " values each");
        SweepWindow w;
        w.center = ParamPoint::zero(ps_degree);
        std::vector<Dyadic> c;
        for (const auto& t : ps_center) c.push_back(parse_number(t, "--center"));
        for (std::size_t i = 0; i < dims; i += 2) w.center.coeffs[i / 2] = {c[i], c[i + 1]};
        for (const auto& t : ps_half) w.half_width.push_back(parse_number(t, "--half-width"));
        h.window = w;
      }
      if (ps_recover) {
        if (std::filesystem::exists(ps_log)) {
          auto kept = recover_log(ps_log);
          say("log valid prefix: " + std::to_string(kept) + " bytes");
        }
      }
      SweepLog log(ps_log, h);
      SweepConfig cfg;
      cfg.header = h;
      cfg.stages = ps_stages;
      cfg.max_cells = ps_max_cells;
      cfg.log = say;
      CertifyOptions copt;
      copt.threads = threads;
      RobustnessOptions ropt;
      ropt.threads = threads;
      ropt.max_bits = ps_max_bits;
      SweepReport rep = sweep(log, cfg, [&](const ParamPoint& p, int n_max) {
        return certify_cell(p, n_max, copt, ropt);
      });
      std::cout << "jobs " << rep.jobs << "  new balls " << rep.new_balls << "  skipped (covered) "
                << rep.skipped_covered << "  total balls " << log.state().balls.size() << "\n";
      if (!rep.finished) {
        std::cout << "budget exhausted before the last stage finished; rerun with the same --resume to continue\n";
        return kBudget;
      }
      return kOk;
    }

    if (*lr) {
      LogScan scan = scan_log(read_file_bytes(lr_log));
      if (!scan.error.empty()) throw CorruptLog(lr_log + ": " + scan.error);
      const auto& st = scan.state;
      Slice s = lr_slice.slice(Dyadic(2));
      Raster r = render_locus(st.balls, st.header.degree, s);
      Json config{{"command", "locus-render"},
                  {"log", lr_log},
                  {"degree", st.header.degree},
                  {"plane", s.plane},
                  {"window", window_json(s)},
                  {"size", {s.width, s.height}}};
      std::string out = lr_out.empty() ? join(out_dir, "locus.ppm") : lr_out;
      write_text_file(out, to_ppm(r, config, locus_legend(st.balls)));
      std::cout << st.balls.size() << " balls, " << r.painted() << " pixels painted\nwrote " << out << "\n";
      return kOk;
    }

    if (*rd) {
      BoxSet set = boxset_from_json(parse_json_file(rd_boxset));
      Slice s = rd_slice.slice(set.R);
      Raster r = render_slice(set, s);
      Json config{{"command", "render"},
                  {"boxset", rd_boxset},
                  {"plane", s.plane},
                  {"window", window_json(s)},
                  {"size", {s.width, s.height}}};
      std::string out = rd_out.empty() ? join(out_dir, "render.ppm") : rd_out;
      write_text_file(out, to_ppm(r, config, slice_legend(set)));
      std::cout << set.boxes.size() << " boxes, " << r.painted() << " pixels painted\nwrote " << out << "\n";
      return kOk;
    }
  } catch (const BudgetExhausted& e) {
    std::cerr << "budget exhausted: " << e.what() << '\n';
    return kBudget;
  } catch (const PrecisionExhausted& e) {
    std::cerr << "budget exhausted: " << e.what() << '\n';
    return kBudget;
  } catch (const Inconclusive& e) {
    std::cerr << "budget exhausted: " << e.what() << '\n';
    return kBudget;
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failure: " << e.what() << '\n';
    return kVerify;
  } catch (const CorruptLog& e) {
    std::cerr << "error: " << e.what() << " (rerun with --recover to truncate)\n";
    return kInvalid;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal failure: " << e.what() << '\n';
    return kVerify;
  }
  return kInvalid;
}
