// Copyright 2026 The c3kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "c3/colmap_io.h"
#include "c3/correspondence.h"
#include "c3/dataset.h"
#include "c3/error.h"
#include "c3/geometry.h"
#include "c3/metrics.h"
#include "c3/sourcing.h"

namespace py = pybind11;

namespace c3 {
namespace {

ModelFormat ParseFormat(const std::string& s) {
  if (s == "binary") return ModelFormat::kBinary;
  if (s == "text") return ModelFormat::kText;
  if (s == "auto") return ModelFormat::kAuto;
  Fail(ErrorCode::kInvalidArgument, "format must be binary, text or auto");
}

}  // namespace
}  // namespace c3

PYBIND11_MODULE(_core, m) {
  using namespace c3;
  m.doc() = "c3kit native core";

  // Messages start with the error code name, e.g. "DegenerateConfiguration: ...".
  py::register_exception<Error>(m, "C3Error", PyExc_RuntimeError);

  // --- Models ----------------------------------------------------------------
  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init<>())
      .def_readwrite("camera_id", &CameraIntrinsics::camera_id)
      .def_readwrite("raw_model_id", &CameraIntrinsics::raw_model_id)
      .def_readwrite("raw_model_name", &CameraIntrinsics::raw_model_name)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height)
      .def_readwrite("params", &CameraIntrinsics::params)
      .def_property_readonly("supported", &CameraIntrinsics::supported);

  py::class_<ImagePose>(m, "ImagePose")
      .def(py::init<>())
      .def_readwrite("image_id", &ImagePose::image_id)
      .def_readwrite("qvec", &ImagePose::qvec)
      .def_readwrite("tvec", &ImagePose::tvec)
      .def_readwrite("camera_id", &ImagePose::camera_id)
      .def_readwrite("name", &ImagePose::name)
      .def_property_readonly("num_observations",
                             [](const ImagePose& p) { return p.observations.size(); });

  py::class_<ScenePoint>(m, "ScenePoint")
      .def_readonly("point3d_id", &ScenePoint::point3d_id)
      .def_readonly("xyz", &ScenePoint::xyz)
      .def_readonly("rgb", &ScenePoint::rgb)
      .def_readonly("error", &ScenePoint::error)
      .def_property_readonly("track_length",
                             [](const ScenePoint& p) { return p.track.size(); });

  py::class_<SparseModel>(m, "SparseModel")
      .def(py::init<>())
      .def_readonly("cameras", &SparseModel::cameras)
      .def_readonly("images", &SparseModel::images)
      .def_readonly("points", &SparseModel::points)
      .def("__eq__", [](const SparseModel& a, const SparseModel& b) { return a == b; });

  m.def(
      "read_model",
      [](const std::filesystem::path& dir, const std::string& format) {
        return ReadModel(dir, ParseFormat(format));
      },
      py::arg("dir"), py::arg("format") = "auto");
  m.def(
      "write_model",
      [](const SparseModel& model, const std::filesystem::path& dir, const std::string& format) {
        WriteModel(model, dir, ParseFormat(format));
      },
      py::arg("model"), py::arg("dir"), py::arg("format") = "binary");

  // --- Geometry --------------------------------------------------------------
  py::class_<SimilarityTransform2D>(m, "SimilarityTransform2D")
      .def(py::init<>())
      .def(py::init<double, double, double, double>(), py::arg("scale"), py::arg("theta"),
           py::arg("tx"), py::arg("ty"))
      .def_property_readonly("scale", &SimilarityTransform2D::scale)
      .def_property_readonly("theta", &SimilarityTransform2D::theta)
      .def_property_readonly("tx", &SimilarityTransform2D::tx)
      .def_property_readonly("ty", &SimilarityTransform2D::ty)
      .def("apply", &SimilarityTransform2D::Apply)
      .def("inverse", &SimilarityTransform2D::Inverse)
      .def("compose", &SimilarityTransform2D::Compose)
      .def("__eq__", [](const SimilarityTransform2D& a, const SimilarityTransform2D& b) {
        return a == b;
      });

  py::class_<PlanAlignment>(m, "PlanAlignment")
      .def(py::init<>())
      .def_readwrite("component_id", &PlanAlignment::component_id)
      .def_readwrite("plan_id", &PlanAlignment::plan_id)
      .def_readwrite("rectification", &PlanAlignment::rectification)
      .def_readwrite("similarity", &PlanAlignment::similarity)
      .def_readwrite("plan_width", &PlanAlignment::plan_width)
      .def_readwrite("plan_height", &PlanAlignment::plan_height);

  py::class_<PlanPose>(m, "PlanPose")
      .def_readonly("position", &PlanPose::position)
      .def_readonly("heading", &PlanPose::heading)
      .def_readonly("normalized_position", &PlanPose::normalized_position);

  m.def("qvec_to_matrix", &QuaternionToRotationMatrix);
  m.def("project_point", &ProjectPoint, py::arg("camera"), py::arg("pose"), py::arg("X"));
  m.def("estimate_up_axis", &EstimateUpAxis);
  m.def("rectification_from_up", &RectificationFromUp);
  m.def("rectify_and_flatten", &RectifyAndFlatten);
  m.def("camera_plan_pose", &CameraPlanPose);
  m.def(
      "estimate_similarity",
      [](const std::vector<Eigen::Vector2d>& source, const std::vector<Eigen::Vector2d>& target) {
        if (source.size() != target.size()) {
          Fail(ErrorCode::kLengthMismatch, "source and target differ in length");
        }
        std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs;
        for (size_t i = 0; i < source.size(); ++i) pairs.emplace_back(source[i], target[i]);
        return EstimateSimilarity(pairs);
      },
      py::arg("source"), py::arg("target"));

  // --- Correspondences and datasets -----------------------------------------
  py::class_<Correspondence>(m, "Correspondence")
      .def_readonly("photo_xy", &Correspondence::photo_xy)
      .def_readonly("plan_xy", &Correspondence::plan_xy)
      .def_readonly("point3d_id", &Correspondence::point3d_id)
      .def_readonly("observation_index", &Correspondence::observation_index);

  py::class_<CorrespondenceSet>(m, "CorrespondenceSet")
      .def_readonly("scene_id", &CorrespondenceSet::scene_id)
      .def_readonly("plan_id", &CorrespondenceSet::plan_id)
      .def_readonly("image_id", &CorrespondenceSet::image_id)
      .def_readonly("photo_width", &CorrespondenceSet::photo_width)
      .def_readonly("photo_height", &CorrespondenceSet::photo_height)
      .def_readonly("plan_width", &CorrespondenceSet::plan_width)
      .def_readonly("plan_height", &CorrespondenceSet::plan_height)
      .def_readonly("records", &CorrespondenceSet::records)
      .def_readonly("plan_pose", &CorrespondenceSet::plan_pose);

  m.def(
      "derive_pair",
      [](const SparseModel& model, const PlanAlignment& alignment, uint32_t image_id,
         double max_reproj_error_px, bool clip_to_plan, bool observed) {
        DeriveOptions options;
        options.max_reproj_error_px = max_reproj_error_px;
        options.clip_to_plan = clip_to_plan;
        options.photo_source = observed ? PhotoSource::kObserved : PhotoSource::kReproject;
        return DerivePair(model, alignment, image_id, options);
      },
      py::arg("model"), py::arg("alignment"), py::arg("image_id"),
      py::arg("max_reproj_error_px") = 4.0, py::arg("clip_to_plan") = true,
      py::arg("observed") = false);

  py::class_<DatasetStats>(m, "DatasetStats")
      .def_readonly("scene_count", &DatasetStats::scene_count)
      .def_readonly("plan_count", &DatasetStats::plan_count)
      .def_readonly("photo_count", &DatasetStats::photo_count)
      .def_readonly("pose_count", &DatasetStats::pose_count)
      .def_readonly("pair_count", &DatasetStats::pair_count)
      .def_readonly("total_correspondences", &DatasetStats::total_correspondences)
      .def_readonly("min_per_pair", &DatasetStats::min_per_pair)
      .def_readonly("max_per_pair", &DatasetStats::max_per_pair)
      .def_readonly("mean_per_pair", &DatasetStats::mean_per_pair);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("pairs", &Dataset::pairs)
      .def_property_readonly("scene_ids", [](const Dataset& d) {
        std::vector<std::string> ids;
        for (const SceneManifest& s : d.scenes) ids.push_back(s.scene_id);
        return ids;
      });
  m.def("import_dataset", &ImportDataset);
  m.def("compute_stats", &ComputeStats);

  // --- Metrics -----------------------------------------------------------------
  py::class_<PckPoint>(m, "PckPoint")
      .def_readonly("threshold", &PckPoint::threshold)
      .def_readonly("fraction", &PckPoint::fraction);
  py::class_<PrPoint>(m, "PrPoint")
      .def_readonly("confidence_threshold", &PrPoint::confidence_threshold)
      .def_readonly("precision", &PrPoint::precision)
      .def_readonly("recall", &PrPoint::recall);
  py::class_<WilcoxonResult>(m, "WilcoxonResult")
      .def_readonly("w", &WilcoxonResult::w)
      .def_readonly("w_plus", &WilcoxonResult::w_plus)
      .def_readonly("w_minus", &WilcoxonResult::w_minus)
      .def_readonly("n", &WilcoxonResult::n)
      .def_readonly("p_value", &WilcoxonResult::p_value)
      .def_readonly("exact", &WilcoxonResult::exact);

  m.attr("DEFAULT_CORRECT_THRESHOLD") = kDefaultCorrectThreshold;
  m.def(
      "pck",
      [](const std::vector<double>& errors, std::optional<std::vector<double>> thresholds) {
        return Pck(errors, thresholds ? *thresholds : DefaultPckThresholds());
      },
      py::arg("errors"), py::arg("thresholds") = py::none());
  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return WilcoxonSignedRank(a, b);
      },
      py::arg("a"), py::arg("b"));
  m.def("improvement_ratio", &ImprovementRatio, py::arg("baseline_error"),
        py::arg("our_error"));

  py::class_<MetricReport>(m, "MetricReport")
      .def_readonly("aggregate_rmse", &MetricReport::aggregate_rmse)
      .def_readonly("pooled_rmse", &MetricReport::pooled_rmse)
      .def_readonly("pck", &MetricReport::pck)
      .def_readonly("pr", &MetricReport::pr)
      .def_readonly("pr_available", &MetricReport::pr_available)
      .def_readonly("expected_pairs", &MetricReport::expected_pairs)
      .def_property_readonly("scored_pairs",
                             [](const MetricReport& r) { return r.per_pair.size(); });
  m.def(
      "evaluate",
      [](const Dataset& dataset, const std::filesystem::path& predictions_root,
         const std::string& split, bool allow_missing) {
        EvaluateOptions options;
        options.split = split == "all"     ? SplitFilter::kAll
                        : split == "train" ? SplitFilter::kTrain
                                           : SplitFilter::kTest;
        options.allow_missing = allow_missing;
        return Evaluate(dataset, predictions_root, options);
      },
      py::arg("dataset"), py::arg("predictions_root"), py::arg("split") = "test",
      py::arg("allow_missing") = false);
  m.def(
      "write_ground_truth_predictions",
      [](const Dataset& dataset, const std::filesystem::path& root) {
        for (const CorrespondenceSet& set : dataset.pairs) {
          WritePredictionFile(root, GroundTruthAsPredictions(set));
        }
      },
      py::arg("dataset"), py::arg("root"));

  // --- Sourcing ----------------------------------------------------------------
  m.def("infer_scene_name", [](const std::string& tag) { return InferSceneName(tag); });
  m.def("is_scene_of_interest",
        [](const std::string& scene_type) { return IsSceneOfInterest(scene_type); });
  m.def(
      "haversine_meters",
      [](double lat1, double lon1, double lat2, double lon2) {
        return HaversineMeters(GeoPoint::Make(lat1, lon1), GeoPoint::Make(lat2, lon2));
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"));
  m.def(
      "within_radius",
      [](double lat1, double lon1, double lat2, double lon2, double radius_m) {
        return WithinRadius(GeoPoint::Make(lat1, lon1), GeoPoint::Make(lat2, lon2), radius_m);
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
      py::arg("radius_m") = kDefaultGeoRadiusMeters);
}
