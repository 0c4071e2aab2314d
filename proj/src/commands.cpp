#include "splitkit/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "splitkit/bracket.hpp"
#include "splitkit/parallel.hpp"

namespace splitkit {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class Stopwatch {
 public:
  Stopwatch(Timings& sink, std::string name)
      : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    sink_.emplace_back(name_, std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
  }

 private:
  Timings& sink_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

std::string num(double v) { return fmt::format("{:.17g}", v); }

// JSON numbers must be finite; non-finite values become strings.
Json jnum(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

Json jvec(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : out_(path, std::ios::binary) {
    if (!out_) throw ValidationError("cannot write '" + path.string() + "'");
    out_ << header << '\n';
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

Json header(const RunContext& ctx, const std::string& command) {
  Json j;
  j["tool"] = "splitkit";
  j["version"] = SPLITKIT_VERSION;
  j["command"] = command;
  j["config_hash"] = ctx.config_hash;
  j["seed"] = ctx.config.seed;
  return j;
}

}  // namespace

PaperExample paper_example() {
  const ToralAutomorphism a = paper_matrix();
  PaperExample ex;
  ex.det = a.determinant();
  ex.trace = a.trace();
  const RealEigen eig = real_eigen(a.matrix());
  ex.eigenvalues = eig.values;

  // one-step ratios on the true eigenplanes
  const Plane2 slow(eig.vectors.col(0), eig.vectors.col(1));
  const Line1 fast(eig.vectors.col(2));
  auto ratios = [&](const Mat3& metric, double& dyn, double& vol, double& bunch) {
    const Mat3 m = metric * a.matrix() * metric.inverse();
    const Plane2 e = slow.transformed(metric);
    const Vec3 f = (metric * fast.direction()).normalized();
    const SingularPair sp = restricted_singular_values(m, e);
    const double nf = (m * f).norm();
    dyn = sp.s_max / nf;
    vol = sp.s_min * sp.s_max / nf;
    bunch = sp.s_max * sp.s_max / nf;
  };
  ratios(eigenbasis_metric(a.matrix()), ex.dyn_ratio, ex.vol_ratio, ex.bunch_ratio);
  ratios(Mat3::Identity(), ex.flat_dyn_ratio, ex.flat_vol_ratio, ex.flat_bunch_ratio);
  ex.volume_dominated = ex.vol_ratio < 1.0;
  ex.center_bunched = ex.bunch_ratio < 1.0;
  return ex;
}

Json cmd_paper_example(const RunContext& ctx, Timings& timings) {
  Stopwatch sw(timings, "paper_example");
  const PaperExample ex = paper_example();
  Json j = header(ctx, "paper-example");
  j["matrix"] = MapSpec::paper_linear().to_json()["matrix"];
  j["det"] = ex.det;
  j["trace"] = ex.trace;
  j["eigenvalues"] = jvec(ex.eigenvalues);
  j["eigenvalues_2dp"] = Json::array();
  for (int i = 0; i < 3; ++i) j["eigenvalues_2dp"].push_back(fmt::format("{:.2f}", ex.eigenvalues[i]));
  j["ratios_eigenbasis_metric"] = {{"dyn_ratio", ex.dyn_ratio}, {"vol_ratio", ex.vol_ratio}, {"bunch_ratio", ex.bunch_ratio}};
  j["ratios_flat_metric"] = {
      {"dyn_ratio", ex.flat_dyn_ratio}, {"vol_ratio", ex.flat_vol_ratio}, {"bunch_ratio", ex.flat_bunch_ratio}};
  j["verdicts"] = {{"dynamically_dominated", ex.dyn_ratio < 1.0},
                   {"volume_dominated", ex.volume_dominated},
                   {"center_bunched", ex.center_bunched}};
  j["conclusion"] = ex.volume_dominated && !ex.center_bunched ? "volume dominated but not center-bunched"
                                                              : "unexpected verdict combination";
  write_json(ctx.out_dir / "paper_example.json", j);
  return j;
}

Json cmd_splitting(const RunContext& ctx, Timings& timings) {
  const ExperimentConfig& cfg = ctx.config;
  const Diffeo phi = cfg.map.build();
  const std::vector<Vec3> samples = cfg.sample_points();
  DominationOptions opts;
  opts.splitting = cfg.splitting_options();
  Json j = header(ctx, "splitting");

  if (!cfg.map.shears.empty()) {
    Stopwatch sw(timings, "cone_check");
    const ConeCheck guard = domination_guard(phi, samples, cfg.cone_steps, opts.splitting);
    j["cone_check"] = {{"steps", guard.steps}, {"passed", guard.passed}, {"max_dyn_ratio", guard.max_dyn_ratio},
                       {"unconverged_samples", guard.unconverged}};
    if (!guard.passed) {
      throw ValidationError(fmt::format(
          "shear amplitude too large: dyn_ratio after {} steps reaches {:.6g} >= 1; lower the amplitude",
          cfg.cone_steps, guard.max_dyn_ratio));
    }
  }

  DominationReport report;
  {
    Stopwatch sw(timings, "domination_report");
    report = domination_report(phi, samples, cfg.k_max, opts);
  }
  if (report.excluded.size() == samples.size()) {
    throw NumericalError("splitting did not converge at any sample; raise splitting.pullback_k_max");
  }

  {
    Stopwatch sw(timings, "write_splitting_csv");
    CsvWriter csv(ctx.out_dir / "splitting.csv", "x1,x2,x3,k,dyn_ratio,vol_ratio,bunch_ratio,angle_residual");
    for (const auto& r : report.rows) {
      csv.row({num(r.x[0]), num(r.x[1]), num(r.x[2]), std::to_string(r.k), num(r.dyn_ratio), num(r.vol_ratio),
               num(r.bunch_ratio), num(r.angle_residual)});
    }
  }

  Json pullback = Json::array();
  {
    Stopwatch sw(timings, "pullback_sequences");
    std::vector<PullbackSequence> seqs(samples.size());
    parallel_for(static_cast<int>(samples.size()), [&](int i) {
      seqs[i] = compute_slow_plane(phi, samples[i], opts.splitting.e0, cfg.pullback_steps);
    });
    CsvWriter csv(ctx.out_dir / "pullback.csv", "x1,x2,x3,k,step_angle,angle_to_limit");
    const int lo = std::max(1, cfg.pullback_steps / 3);
    for (size_t i = 0; i < samples.size(); ++i) {
      const Plane2& limit = report.splittings[i].E;
      std::vector<double> ks, logs;
      for (int k = 0; k <= seqs[i].horizon(); ++k) {
        const double angle = principal_angle(seqs[i].entries[k], limit);
        const Vec3& x = seqs[i].base;
        csv.row({num(x[0]), num(x[1]), num(x[2]), std::to_string(k), num(seqs[i].step_angles[k]), num(angle)});
        if (k >= lo && angle > 0.0) {
          ks.push_back(k);
          logs.push_back(std::log(angle));
        }
      }
      Json e;
      e["x"] = jvec(seqs[i].base);
      e["fit_window"] = {lo, seqs[i].horizon()};
      e["log_angle_slope"] = ks.size() >= 2 ? jnum(fitted_slope(ks, logs)) : Json(nullptr);
      e["converged"] = seqs[i].converged;
      e["k_converged"] = seqs[i].k_converged;
      pullback.push_back(e);
    }
  }

  auto verdict = [](const Verdict& v) { return Json{{"holds", v.holds}, {"k0", v.k0}}; };
  j["verdicts"] = {{"dynamical", verdict(report.dynamical)},
                   {"volume", verdict(report.volume)},
                   {"center_bunching", verdict(report.bunching)}};
  j["max_volume_identity_defect"] = jnum(report.max_volume_identity_defect);
  j["submultiplicative"] = report.submultiplicative;
  j["excluded_samples"] = report.excluded;
  j["warnings"] = report.warnings;
  j["samples"] = Json::array();
  for (size_t i = 0; i < samples.size(); ++i) {
    const SplittingSample& s = report.splittings[i];
    Json e;
    e["x"] = jvec(s.x);
    e["k_used"] = s.k_used;
    e["residual"] = jnum(s.residual);
    e["slow_step_angle"] = jnum(s.slow_step_angle);
    e["fast_step_angle"] = jnum(s.fast_step_angle);
    e["pullback_converged"] = s.pullback_converged;
    e["converged"] = s.converged;
    e["E_normal"] = jvec(s.E.normal());
    e["F_direction"] = jvec(s.F.direction());
    e["first_support_visit"] = first_support_visit(cfg.map, s.x, cfg.k_max);
    j["samples"].push_back(e);
  }
  j["pullback"] = pullback;
  write_json(ctx.out_dir / "splitting.json", j);
  return j;
}

Json cmd_bracket(const RunContext& ctx, Timings& timings) {
  const ExperimentConfig& cfg = ctx.config;
  const Diffeo phi = cfg.map.build();
  const std::vector<Vec3> samples = cfg.sample_points();
  const AdaptedFrame initial = cfg.initial_plane.frame();
  BoundOptions bopts;
  bopts.splitting = cfg.splitting_options();
  bopts.h = cfg.h;
  bopts.fd_k_max = cfg.fd_k_max;

  const int n = static_cast<int>(samples.size());
  std::vector<BoundCurve> curves(n);
  std::vector<BracketSample> base(n);
  std::vector<ProjectedBracket> proj(n), proj_gs(n);
  std::vector<InvarianceResidual> inv(n);
  {
    Stopwatch sw(timings, "bound_curves");
    parallel_for(n, [&](int i) {
      curves[i] = bound_curve(phi, initial, samples[i], cfg.k_max, bopts);
      base[i] = bracket_coefficient(initial, curves[i].x, cfg.h);
    });
  }
  {
    Stopwatch sw(timings, "projected_brackets");
    parallel_for(n, [&](int i) {
      proj[i] = projected_bracket_norm(phi, initial, curves[i].x, cfg.projected_k, cfg.h, PairChoice::Singular);
      proj_gs[i] = projected_bracket_norm(phi, initial, curves[i].x, cfg.projected_k, cfg.h, PairChoice::GramSchmidt);
      inv[i] = invariance_identity_residual(phi, initial, curves[i].x, cfg.invariance_k, bopts.splitting, cfg.h);
    });
  }

  Json j = header(ctx, "bracket");
  double c_estimate = 0.0, det_ratio_max = 0.0, c1_max = 0.0, inv_max = 0.0, frame_dev = 0.0;
  {
    Stopwatch sw(timings, "write_bracket_csv");
    CsvWriter csv(ctx.out_dir / "bracket.csv", "x1,x2,x3,k,h,c,lhs,rhs,quotient");
    for (int i = 0; i < n; ++i) {
      const Vec3& x = curves[i].x;
      csv.row({num(x[0]), num(x[1]), num(x[2]), "0", num(cfg.h), num(base[i].c), num(std::abs(base[i].c)), num(1.0),
               num(std::abs(base[i].c))});
      for (const auto& r : curves[i].records) {
        csv.row({num(x[0]), num(x[1]), num(x[2]), std::to_string(r.k), num(cfg.h), num(r.c), num(r.lhs), num(r.rhs),
                 num(r.quotient)});
        c_estimate = std::max(c_estimate, r.quotient);
        det_ratio_max = std::max(det_ratio_max, r.det_ratio);
      }
    }
  }
  j["samples"] = Json::array();
  for (int i = 0; i < n; ++i) {
    const BoundCurve& c = curves[i];
    Json e;
    e["x"] = jvec(c.x);
    e["c_initial"] = jnum(base[i].c);
    e["c_initial_error"] = jnum(base[i].error_estimate);
    e["weak_derivative"] = base[i].weak_derivative;
    e["max_quotient"] = jnum(c.running_max.back());
    const int mid = std::max(1, cfg.k_max / 2);
    e["running_max_mid"] = jnum(c.running_max[mid - 1]);
    e["running_max_change"] = jnum(c.running_max.back() / c.running_max[mid - 1] - 1.0);
    e["rhs_log_slope"] = jnum(c.rhs_log_slope);
    e["mean_step_log_vol"] = jnum(c.mean_step_log_vol);
    e["lhs_fd"] = Json::array();
    for (const auto& r : c.records) {
      if (r.k <= cfg.fd_k_max) e["lhs_fd"].push_back({{"k", r.k}, {"transport", jnum(r.lhs)}, {"fd", jnum(r.lhs_fd)}});
    }
    e["projected_bracket"] = {{"k", cfg.projected_k},
                              {"direct", jnum(proj[i].direct)},
                              {"formula", jnum(proj[i].formula)},
                              {"gram_schmidt_pair", jnum(proj_gs[i].direct)},
                              {"c1", jnum(proj[i].c1)},
                              {"isotropic", proj[i].isotropic}};
    e["invariance"] = {{"k", cfg.invariance_k},
                       {"residual", jnum(inv[i].residual)},
                       {"norm_identity_error", jnum(inv[i].norm_identity_error)},
                       {"degenerate", inv[i].degenerate}};
    if (std::isfinite(proj[i].c1)) c1_max = std::max(c1_max, proj[i].c1);
    inv_max = std::max(inv_max, inv[i].residual);
    frame_dev = std::max(frame_dev, std::abs(proj[i].direct - proj_gs[i].direct));
    j["samples"].push_back(e);
  }
  j["constants"] = {{"C_bound_quotient", jnum(c_estimate)},
                    {"C1_projection", jnum(c1_max)},
                    {"det_ratio_max", jnum(det_ratio_max)},
                    {"max_invariance_residual", jnum(inv_max)},
                    {"frame_independence_deviation", jnum(frame_dev)}};
  write_json(ctx.out_dir / "bracket.json", j);
  return j;
}

Json cmd_surface(const RunContext& ctx, Timings& timings) {
  const ExperimentConfig& cfg = ctx.config;
  const Diffeo phi = cfg.map.build();
  const Vec3 x0 = cfg.sample_points().front();
  const AdaptedFrame initial = cfg.initial_plane.frame();
  const SplittingOptions sopts = cfg.splitting_options();
  FlowSpec spec;
  spec.step = cfg.step;
  spec.chart = Chart::box(x0, 0.45);

  Json j = header(ctx, "surface");
  j["x0"] = jvec(x0);
  j["patches"] = Json::array();
  std::optional<SurfacePatch> previous;
  for (int k : cfg.surface_ks) {
    Stopwatch sw(timings, "patch_k" + std::to_string(k));
    const AdaptedFrame frame = pullback_frame(phi, initial, k);
    const SurfacePatch patch = build_patch(frame, x0, cfg.eps, cfg.n, spec, k);
    const TangencyReport own = tangency_defect(patch, frame.plane_field());
    std::vector<Plane2> limit_planes(patch.points.size(), coordinate_plane());
    parallel_for(static_cast<int>(patch.points.size()),
                 [&](int i) { limit_planes[i] = compute_splitting(phi, patch.points[i], sopts).E; });
    const TangencyReport lim = tangency_defect(patch, [&](const Vec3& p) {
      const auto it = std::find_if(patch.points.begin(), patch.points.end(), [&](const Vec3& q) { return q == p; });
      return limit_planes[it - patch.points.begin()];
    });
    const PushforwardCheck push = pushforward_norm_check(frame, x0, cfg.t, spec);

    CsvWriter csv(ctx.out_dir / fmt::format("patch_k{}.csv", k), "t,s,x1,x2,x3,defect_angle,limit_defect_angle");
    for (int jj = 0; jj < patch.n; ++jj)
      for (int i = 0; i < patch.n; ++i) {
        const Vec3& p = patch.at(i, jj);
        const size_t idx = i + patch.n * jj;
        csv.row({num(patch.coordinate(i)), num(patch.coordinate(jj)), num(p[0]), num(p[1]), num(p[2]),
                 num(own.node_angles[idx]), num(lim.node_angles[idx])});
      }

    Json e;
    e["k"] = k;
    e["tangency_own"] = {{"max", jnum(own.max_angle)}, {"mean", jnum(own.mean_angle)}};
    e["tangency_limit"] = {{"max", jnum(lim.max_angle)}, {"mean", jnum(lim.mean_angle)}};
    e["dt_defect"] = jnum(dt_defect(patch, frame));
    e["planarity_defect"] = jnum(planarity_defect(patch));
    e["max_tangent_norm"] = jnum(max_tangent_norm(patch));
    if (previous) {
      double disp = 0.0;
      for (size_t i = 0; i < patch.points.size(); ++i)
        disp = std::max(disp, (patch.points[i] - previous->points[i]).norm());
      e["cauchy_displacement"] = jnum(disp);
    }
    e["pushforward_norm"] = {{"t", cfg.t}, {"lhs", jnum(push.lhs)}, {"rhs", jnum(push.rhs)}, {"rel_err", jnum(push.rel_err)}};
    j["patches"].push_back(e);
    previous = patch;
  }

  {
    Stopwatch sw(timings, "push_convergence");
    const std::vector<PushSample> series = push_convergence(phi, initial, x0, cfg.surface_ks, cfg.t, spec);
    j["push_convergence"] = Json::array();
    bool nonincreasing = true;
    for (size_t i = 0; i < series.size(); ++i) {
      j["push_convergence"].push_back({{"k", series[i].k},
                                       {"difference", jnum(series[i].difference)},
                                       {"derivative_error", jnum(series[i].derivative_error)}});
      if (i > 0 && !(series[i].difference <= series[i - 1].difference + 1e-6)) nonincreasing = false;
    }
    j["push_nonincreasing"] = nonincreasing;
  }
  write_json(ctx.out_dir / "surface.json", j);
  return j;
}

Json cmd_uniqueness(const RunContext& ctx, Timings& timings) {
  const ExperimentConfig& cfg = ctx.config;
  const Diffeo phi = cfg.map.build();
  const Vec3 x0 = cfg.sample_points().front();
  const AdaptedFrame initial = cfg.initial_plane.frame();
  const SplittingOptions sopts = cfg.splitting_options();

  Json j = header(ctx, "uniqueness");
  {
    Stopwatch sw(timings, "hartman");
    const HartmanData h = hartman_report(phi, initial, sopts, cfg.slice, cfg.hartman_k_max, cfg.h);
    Json sup = Json::array(), dist = Json::array();
    for (size_t i = 0; i < h.ks.size(); ++i) {
      sup.push_back(jnum(h.sup_derivative[i]));
      dist.push_back(jnum(h.distance[i]));
    }
    double sup_max = 0.0;
    for (double v : h.sup_derivative) sup_max = std::max(sup_max, v);
    j["hartman"] = {{"slice_x2", cfg.slice.x2},
                    {"bounded", h.bounded},
                    {"sup_max", jnum(sup_max)},
                    {"sup_series", sup},
                    {"distance_series", dist},
                    {"distance_decreasing", h.distance_decreasing},
                    {"verdict", h.consistent ? "Hartman hypotheses numerically consistent"
                                             : "Hartman hypotheses not confirmed"}};
  }
  {
    Stopwatch sw(timings, "leaf");
    FlowSpec spec;
    spec.step = cfg.step;
    const double half = 2.0 * cfg.eps + 0.05;
    spec.chart = Chart::box(x0, half);
    const AdaptedFrame limit = phi.is_linear()
                                   ? AdaptedFrame::from_plane_field(constant_plane_field(compute_splitting(phi, x0, sopts).E))
                                   : cached_frame(limit_frame(phi, sopts), Chart::box(x0, half), 9);
    const LeafComparison leaf = leaf_divergence(limit, x0, cfg.eps, cfg.n, cfg.delta, spec);
    j["leaf"] = {{"order_mismatch", jnum(leaf.order_mismatch)},
                 {"lipschitz", jnum(leaf.lipschitz)},
                 {"lipschitz_half_delta", jnum(leaf.lipschitz_half)},
                 {"max_distance", jnum(leaf.max_distance)}};
  }
  write_json(ctx.out_dir / "uniqueness.json", j);
  return j;
}

int run_command(const std::string& command, const std::optional<std::string>& config_path,
                const std::optional<std::string>& out_dir, const std::optional<std::uint64_t>& seed,
                std::ostream& out, std::ostream& err) {
  try {
    RunContext ctx;
    if (config_path) {
      const std::string text = read_file(*config_path);
      ctx.config = ExperimentConfig::parse(text);
      ctx.config_hash = sha256_hex(text);
    } else if (command != "paper-example") {
      throw ValidationError("--config is required for '" + command + "'");
    } else {
      ctx.config_hash = sha256_hex(ctx.config.dump());
    }
    if (seed) ctx.config.seed = *seed;
    ctx.out_dir = out_dir ? fs::path(*out_dir) : fs::path(ctx.config.output_dir);
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + ctx.out_dir.string() + "': " + ec.message());

    Timings timings;
    Json summary;
    if (command == "paper-example") summary = cmd_paper_example(ctx, timings);
    else if (command == "splitting") summary = cmd_splitting(ctx, timings);
    else if (command == "bracket") summary = cmd_bracket(ctx, timings);
    else if (command == "surface") summary = cmd_surface(ctx, timings);
    else if (command == "uniqueness") summary = cmd_uniqueness(ctx, timings);
    else throw ValidationError("unknown command '" + command + "'");

    Json t;
    t["command"] = command;
    t["config_hash"] = ctx.config_hash;
    t["blocks"] = Json::object();
    for (const auto& [name, secs] : timings) t["blocks"][name] = secs;
    write_json(ctx.out_dir / "timing.json", t);

    if (command == "paper-example") {
      out << fmt::format("eigenvalues: {:.2f} {:.2f} {:.2f}\n", summary["eigenvalues"][0].get<double>(),
                         summary["eigenvalues"][1].get<double>(), summary["eigenvalues"][2].get<double>());
      out << "det = " << summary["det"] << ", trace = " << summary["trace"] << "\n";
      out << summary["conclusion"].get<std::string>() << "\n";
    }
    out << "wrote " << (ctx.out_dir / "").string() << "\n";
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace splitkit
