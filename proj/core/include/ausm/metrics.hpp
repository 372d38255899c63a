#pragma once

#include <span>
#include <vector>

#include "ausm/interchange.hpp"
#include "ausm/tensor.hpp"

namespace ausm {

/// Intersection over union of two hard masks; 1 when both are empty.
double region_j(const Tensor& pred, const Tensor& gt);

/// Boundary pixels are foreground pixels with a 4-neighbour inside the image
/// that is background. Precision and recall count boundary pixels with a
/// counterpart within Chebyshev distance tol_px. 1 when both are empty.
double boundary_f(const Tensor& pred, const Tensor& gt, std::size_t tol_px);

/// max(1, round(0.0075 * image diagonal)).
std::size_t default_boundary_tolerance(std::size_t height, std::size_t width);

struct JfSummary {
  double j_mean = 0.0;
  double f_mean = 0.0;
  double jf = 0.0;  // (mean J + mean F) / 2
  double g = 0.0;   // mean over objects of (J + F) / 2
};

JfSummary jf_and_g(std::span<const double> J, std::span<const double> F);

struct SpatioTemporalTrack {
  std::size_t cls = 0;
  double score = 0.0;
  std::vector<Tensor> masks;  // one [h, w] mask per frame
};

/// Sum of per-frame intersections over sum of unions; 0 when both are empty.
double spatio_temporal_iou(const SpatioTemporalTrack& a, const SpatioTemporalTrack& b);

std::vector<double> default_iou_thresholds();

/// Per class: predictions in descending score order each take the unmatched
/// ground-truth track of that class with the highest IoU, counting as a true
/// positive when it reaches the threshold. AP is the area under the
/// monotone precision envelope, averaged over thresholds and then over the
/// classes present in the ground truth. With no ground truth the result is 1
/// if there are no predictions and 0 otherwise.
double track_ap(std::span<const SpatioTemporalTrack> preds, std::span<const SpatioTemporalTrack> gts,
                std::span<const double> iou_thresholds);
double track_ap(std::span<const SpatioTemporalTrack> preds, std::span<const SpatioTemporalTrack> gts);

struct VosReport {
  std::vector<double> J, F;  // per object, mean over frames
  JfSummary summary;
};

/// Ground-truth object i is compared with the prediction whose prompt index
/// is i (empty masks if there is none) on every frame.
VosReport evaluate_vos(const PredictionSet& pred, const GroundTruthSet& gt);

double evaluate_track_ap(const PredictionSet& pred, const GroundTruthSet& gt);

}  // namespace ausm
