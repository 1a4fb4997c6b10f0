#include "sectrack/config.hpp"
#include "sectrack/detection.hpp"
#include "sectrack/ekf.hpp"
#include "sectrack/harness.hpp"
#include "sectrack/propagation.hpp"
#include "sectrack/report.hpp"
#include "sectrack/scenario.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <span>
#include <vector>

namespace py = pybind11;
using namespace sectrack;

namespace {

std::span<const Point2> as_span(const std::vector<Point2>& v) { return {v.data(), v.size()}; }

}  // namespace

PYBIND11_MODULE(_sectrack, m) {
  m.doc() = "RSS-based target tracking with malicious-anchor detection";

  // ---- propagation ----
  py::class_<RadioParams>(m, "RadioParams")
      .def(py::init<>())
      .def_readwrite("p0_db", &RadioParams::p0_db)
      .def_readwrite("alpha", &RadioParams::alpha)
      .def_readwrite("d0_m", &RadioParams::d0_m)
      .def_readwrite("sigma_db", &RadioParams::sigma_db);

  py::class_<RssSample>(m, "RssSample")
      .def(py::init<>())
      .def_readwrite("anchor_id", &RssSample::anchor_id)
      .def_readwrite("pr_db", &RssSample::pr_db)
      .def_readwrite("step", &RssSample::step);

  m.def("emit_rss", &emit_rss, py::arg("params"), py::arg("target_pos"), py::arg("anchor_pos"),
        py::arg("shadow_db"), py::arg("anchor_id") = 0, py::arg("step") = 0);
  m.def("rss_to_sq_distance", &rss_to_sq_distance);
  m.def("rss_to_distance", &rss_to_distance);

  // ---- ekf ----
  py::class_<TargetState>(m, "TargetState")
      .def(py::init<>())
      .def(py::init([](double x, double vx, double y, double vy) {
             return TargetState{x, vx, y, vy};
           }),
           py::arg("x"), py::arg("vx"), py::arg("y"), py::arg("vy"))
      .def_readwrite("x", &TargetState::x)
      .def_readwrite("vx", &TargetState::vx)
      .def_readwrite("y", &TargetState::y)
      .def_readwrite("vy", &TargetState::vy)
      .def("vec", &TargetState::vec)
      .def("position", &TargetState::position);

  py::class_<EkfBelief>(m, "EkfBelief")
      .def(py::init<>())
      .def_readwrite("mean", &EkfBelief::mean)
      .def_readwrite("cov", &EkfBelief::cov);

  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init<>())
      .def_readwrite("process", &NoiseModel::process)
      .def_readwrite("r_db_var", &NoiseModel::r_db_var);

  py::class_<MeasurementUpdate>(m, "MeasurementUpdate")
      .def_readonly("posterior", &MeasurementUpdate::posterior)
      .def_readonly("innovation", &MeasurementUpdate::innovation);

  m.def("cv_transition", &cv_transition);
  m.def("cv_process_noise", &cv_process_noise);
  m.def("time_update", &time_update);
  m.def("predicted_sq_distances",
        [](const TargetState& s, const std::vector<Point2>& anchors) {
          return predicted_sq_distances(s, as_span(anchors));
        });
  m.def("measurement_jacobian_h",
        [](const TargetState& s, const std::vector<Point2>& anchors) {
          return measurement_jacobian_h(s, as_span(anchors));
        });
  m.def("noise_jacobian_v",
        [](const TargetState& s, const std::vector<Point2>& anchors, double alpha) {
          return noise_jacobian_v(s, as_span(anchors), alpha);
        });
  m.def("measurement_update",
        [](const EkfBelief& prior, const Eigen::VectorXd& z, const std::vector<Point2>& anchors,
           const NoiseModel& noise, double alpha, const Eigen::VectorXd& r_scale) {
          return measurement_update(prior, z, as_span(anchors), noise, alpha, r_scale);
        },
        py::arg("prior"), py::arg("z"), py::arg("anchors"), py::arg("noise"), py::arg("alpha"),
        py::arg("r_scale") = Eigen::VectorXd());

  // ---- scenario ----
  py::enum_<AttackKind>(m, "AttackKind")
      .value("location_perturbation", AttackKind::location_perturbation)
      .value("rss_bias", AttackKind::rss_bias);

  py::class_<AttackSpec>(m, "AttackSpec")
      .def(py::init<>())
      .def_readwrite("kind", &AttackSpec::kind)
      .def_readwrite("sigma_attack_m", &AttackSpec::sigma_attack_m)
      .def_readwrite("bias_db", &AttackSpec::bias_db)
      .def_readwrite("persistent", &AttackSpec::persistent);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("field_w_m", &ScenarioConfig::field_w_m)
      .def_readwrite("field_h_m", &ScenarioConfig::field_h_m)
      .def_readwrite("n_anchors", &ScenarioConfig::n_anchors)
      .def_readwrite("n_malicious", &ScenarioConfig::n_malicious)
      .def_readwrite("n_steps", &ScenarioConfig::n_steps)
      .def_readwrite("start_m", &ScenarioConfig::start_m)
      .def_readwrite("velocity_m_per_step", &ScenarioConfig::velocity_m_per_step)
      .def_readwrite("radio", &ScenarioConfig::radio)
      .def_readwrite("attack", &ScenarioConfig::attack)
      .def_readwrite("seed", &ScenarioConfig::seed);

  py::class_<AnchorNode>(m, "AnchorNode")
      .def(py::init<>())
      .def_readwrite("id", &AnchorNode::id)
      .def_readwrite("true_pos", &AnchorNode::true_pos)
      .def_readwrite("reported_pos", &AnchorNode::reported_pos)
      .def_readwrite("honest", &AnchorNode::honest);

  py::class_<Measurement>(m, "Measurement")
      .def(py::init<>())
      .def_readwrite("anchor_id", &Measurement::anchor_id)
      .def_readwrite("z", &Measurement::z);

  py::class_<MeasurementSet>(m, "MeasurementSet")
      .def(py::init<>())
      .def_readwrite("step", &MeasurementSet::step)
      .def_readwrite("items", &MeasurementSet::items);

  py::class_<DroppedSample>(m, "DroppedSample")
      .def_readonly("step", &DroppedSample::step)
      .def_readonly("anchor_id", &DroppedSample::anchor_id);

  py::class_<MeasurementStream>(m, "MeasurementStream")
      .def(py::init<>())
      .def_readwrite("steps", &MeasurementStream::steps)
      .def_readwrite("dropped", &MeasurementStream::dropped);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def(py::init<>())
      .def_readwrite("anchors", &GroundTruth::anchors)
      .def_readwrite("target", &GroundTruth::target)
      .def_readwrite("reported", &GroundTruth::reported)
      .def("reported_pos", &GroundTruth::reported_pos);

  py::class_<RngStreams>(m, "RngStreams").def(py::init<std::uint64_t>());

  m.def("deploy", &deploy);
  m.def("synthesize_measurements", &synthesize_measurements);

  // ---- detection ----
  py::enum_<DetectorMode>(m, "DetectorMode")
      .value("delta", DetectorMode::delta)
      .value("mahalanobis", DetectorMode::mahalanobis);

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_readwrite("mode", &DetectorConfig::mode)
      .def_readwrite("gamma", &DetectorConfig::gamma)
      .def_readwrite("delta_floor_m", &DetectorConfig::delta_floor_m)
      .def_readwrite("warmup", &DetectorConfig::warmup)
      .def_readwrite("window", &DetectorConfig::window)
      .def_readwrite("maha_margin", &DetectorConfig::maha_margin)
      .def_readwrite("maha_floor", &DetectorConfig::maha_floor)
      .def_readwrite("maha_variance_floor", &DetectorConfig::maha_variance_floor)
      .def_readwrite("maha_confirm_steps", &DetectorConfig::maha_confirm_steps)
      .def_readwrite("min_anchors", &DetectorConfig::min_anchors)
      .def_readwrite("min_spread_m", &DetectorConfig::min_spread_m);

  py::class_<TrackerParams>(m, "TrackerParams")
      .def(py::init<>())
      .def_readwrite("process_noise_q", &TrackerParams::process_noise_q)
      .def_readwrite("initial_cov_diag", &TrackerParams::initial_cov_diag)
      .def_readwrite("innovation_gate_sigma", &TrackerParams::innovation_gate_sigma)
      .def_readwrite("info_dominance_cap", &TrackerParams::info_dominance_cap);

  py::class_<DeltaStats>(m, "DeltaStats")
      .def(py::init<>())
      .def_readwrite("step", &DeltaStats::step)
      .def_readwrite("anchor_ids", &DeltaStats::anchor_ids)
      .def_readwrite("delta", &DeltaStats::delta)
      .def_readwrite("delta_avg", &DeltaStats::delta_avg)
      .def_readwrite("delta_max", &DeltaStats::delta_max)
      .def_readwrite("delta_min", &DeltaStats::delta_min);

  py::class_<InnovationWindow>(m, "InnovationWindow")
      .def(py::init<int, int, double>(), py::arg("n_anchors"), py::arg("window"),
           py::arg("variance_floor") = 1e-12)
      .def("push", &InnovationWindow::push)
      .def("full", &InnovationWindow::full)
      .def("variance", &InnovationWindow::variance)
      .def("window", &InnovationWindow::window);

  py::class_<Verdict>(m, "Verdict")
      .def_readonly("anchor_id", &Verdict::anchor_id)
      .def_readonly("flagged_at_step", &Verdict::flagged_at_step)
      .def_readonly("mode", &Verdict::mode)
      .def_readonly("statistic", &Verdict::statistic);

  py::class_<StepDiag>(m, "StepDiag")
      .def_readonly("step", &StepDiag::step)
      .def_readonly("live_ids", &StepDiag::live_ids)
      .def_readonly("delta", &StepDiag::delta)
      .def_readonly("delta_avg", &StepDiag::delta_avg)
      .def_readonly("delta_max", &StepDiag::delta_max)
      .def_readonly("delta_min", &StepDiag::delta_min)
      .def_readonly("maha", &StepDiag::maha)
      .def_readonly("gated_ids", &StepDiag::gated_ids)
      .def_readonly("estimate", &StepDiag::estimate)
      .def_readonly("sq_error_m2", &StepDiag::sq_error_m2);

  py::class_<PassDiag>(m, "PassDiag")
      .def_readonly("pass_index", &PassDiag::pass_index)
      .def_readonly("live_ids", &PassDiag::live_ids)
      .def_readonly("steps", &PassDiag::steps)
      .def_readonly("flagged", &PassDiag::flagged);

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("unobservable", &RunReport::unobservable)
      .def_readonly("passes", &RunReport::passes)
      .def_readonly("verdicts", &RunReport::verdicts)
      .def_readonly("final_live_ids", &RunReport::final_live_ids)
      .def_readonly("mse_m2", &RunReport::mse_m2)
      .def_readonly("n_malicious", &RunReport::n_malicious)
      .def_readonly("n_honest", &RunReport::n_honest)
      .def_readonly("true_detections", &RunReport::true_detections)
      .def_readonly("false_detections", &RunReport::false_detections);

  m.def("delta_stats",
        [](const EkfBelief& posterior, const std::vector<double>& measured_dist,
           const std::vector<Point2>& anchors, const std::vector<int>& ids, int step) {
          return delta_stats(posterior, measured_dist, as_span(anchors), ids, step);
        });
  m.def("delta_flag", &delta_flag);
  m.def("innovation_norm",
        [](const InnovationWindow& w, const Eigen::VectorXd& innovation,
           const std::vector<int>& ids) { return innovation_norm(w, innovation, ids); });
  m.def("maha_flag",
        [](const std::vector<double>& statistics, const std::vector<int>& ids,
           const DetectorConfig& cfg) { return maha_flag(statistics, ids, cfg); });
  m.def("secure_track", &secure_track, py::arg("truth"), py::arg("measurements"), py::arg("radio"),
        py::arg("detector") = DetectorConfig{}, py::arg("tracker") = TrackerParams{});

  // ---- harness ----
  py::class_<TrialConfig>(m, "TrialConfig")
      .def(py::init<>())
      .def_readwrite("scenario", &TrialConfig::scenario)
      .def_readwrite("detector", &TrialConfig::detector)
      .def_readwrite("tracker", &TrialConfig::tracker);

  py::class_<RunOutcome>(m, "RunOutcome")
      .def_readonly("seed", &RunOutcome::seed)
      .def_readonly("truth", &RunOutcome::truth)
      .def_readonly("measurements", &RunOutcome::measurements)
      .def_readonly("report", &RunOutcome::report)
      .def_readonly("runtime_s", &RunOutcome::runtime_s);

  py::enum_<SweepAxis>(m, "SweepAxis")
      .value("n_anchors", SweepAxis::n_anchors)
      .value("n_malicious", SweepAxis::n_malicious)
      .value("sigma_db", SweepAxis::sigma_db)
      .value("sigma_attack", SweepAxis::sigma_attack);

  py::class_<SweepSpec>(m, "SweepSpec")
      .def(py::init<>())
      .def_readwrite("axis", &SweepSpec::axis)
      .def_readwrite("values", &SweepSpec::values)
      .def_readwrite("trials", &SweepSpec::trials)
      .def_readwrite("base", &SweepSpec::base)
      .def_readwrite("root_seed", &SweepSpec::root_seed)
      .def_readwrite("threads", &SweepSpec::threads);

  py::class_<MetricRow>(m, "MetricRow")
      .def_readonly("axis_value", &MetricRow::axis_value)
      .def_readonly("true_detection_rate", &MetricRow::true_detection_rate)
      .def_readonly("false_detection_rate", &MetricRow::false_detection_rate)
      .def_readonly("mse_m2", &MetricRow::mse_m2)
      .def_readonly("trials", &MetricRow::trials)
      .def_readonly("mean_runtime_s", &MetricRow::mean_runtime_s);

  py::class_<CalibrationSpec>(m, "CalibrationSpec")
      .def(py::init<>())
      .def_readwrite("base", &CalibrationSpec::base)
      .def_readwrite("runs", &CalibrationSpec::runs)
      .def_readwrite("percentile", &CalibrationSpec::percentile)
      .def_readwrite("delta_floor_percentile", &CalibrationSpec::delta_floor_percentile)
      .def_readwrite("maha_floor_percentile", &CalibrationSpec::maha_floor_percentile)
      .def_readwrite("seed", &CalibrationSpec::seed);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("gamma", &CalibrationResult::gamma)
      .def_readonly("delta_floor_m", &CalibrationResult::delta_floor_m)
      .def_readonly("maha_floor", &CalibrationResult::maha_floor)
      .def_readonly("maha_margin", &CalibrationResult::maha_margin)
      .def_readonly("percentile", &CalibrationResult::percentile)
      .def_readonly("delta_floor_percentile", &CalibrationResult::delta_floor_percentile)
      .def_readonly("maha_floor_percentile", &CalibrationResult::maha_floor_percentile)
      .def_readonly("runs", &CalibrationResult::runs);

  m.def("run_trial", &run_trial, py::arg("cfg"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_sweep", &run_sweep, py::arg("spec"), py::call_guard<py::gil_scoped_release>());
  m.def("calibrate", &calibrate, py::arg("spec"), py::call_guard<py::gil_scoped_release>());
  m.def("trial_seed", &trial_seed);
  m.def("derive_seed", &derive_seed);

#ifdef SECTRACK_VERSION
  m.attr("__version__") = SECTRACK_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
