#pragma once

#include <tuple>
#include <vector>

#include "lmot/hungarian.hpp"
#include "lmot/kalman.hpp"

namespace lmot::track {

struct Detection {
    int frame = 0;
    int class_id = -1;  // 1..6, or -1 for class-agnostic detections
    BBox box;
    double score = 0.0;
    std::vector<double> embedding;  // empty or unit-norm
};

/// 1 - <u,v> for unit vectors; in [0,2].
double cosine_distance(const std::vector<double>& u, const std::vector<double>& v);

enum class TrackStatus { Tentative, Active, Lost, Removed };

struct Track {
    int id = 0;
    int class_id = -1;
    KalmanState state;
    TrackStatus status = TrackStatus::Tentative;
    int age = 0;
    int time_since_update = 0;
    int hits = 0;
    Detection last_observation;
    KalmanState state_at_last_obs;  // frozen for observation-centric re-update
    std::vector<std::tuple<int, BBox, double>> history;  // (frame, box, score)
    std::vector<double> smoothed_embedding;  // EMA, unit-renormalized
};

struct TrackerConfig {
    double tau_high = 0.6;
    double tau_low = 0.1;
    double iou_gate_stage1 = 0.2;
    double iou_gate_stage2 = 0.5;
    int max_age = 30;
    int min_hits = 3;
    double appearance_weight = 0.0;
    double ocm_weight = 0.0;  // optional velocity-direction cost, off by default
    bool use_oru = true;
    int interp_max_gap = 20;
    double fps = 20.0;
    double ema_momentum = 0.9;
    KalmanParams kalman;

    void validate() const;
};

struct AssociationResult {
    std::vector<std::pair<int, int>> matches;  // (track index, detection index)
    std::vector<int> unmatched_tracks;
    std::vector<int> unmatched_dets_high;
};

/// ByteTrack-style two-stage association. Stage 1: IoU (+ optional appearance)
/// against detections scoring >= tau_high; stage 2: IoU-only rescue of the
/// remaining non-lost tracks with [tau_low, tau_high) detections.
AssociationResult associate_two_stage(const std::vector<Track>& tracks,
                                      const std::vector<Detection>& detections, const TrackerConfig& cfg);

/// Replay virtual observations across an occlusion gap (linear in center,
/// aspect, height) from the state frozen at the last real observation, then
/// apply the recovering observation.
void oru_reupdate(Track& track, const Detection& new_obs, const TrackerConfig& cfg);

struct ResultRow {
    int frame = 0;
    int id = 0;
    BBox box;
    double score = 1.0;
    int class_id = -1;
};

/// Fill per-track gaps of at most max_gap frames with affine box trajectories.
std::vector<ResultRow> linear_interpolation(std::vector<ResultRow> rows, int max_gap = 20);

class TrackerEngine {
   public:
    explicit TrackerEngine(TrackerConfig cfg);

    /// Advance one frame; detections must all carry `frame`, frames strictly increasing.
    /// Returns snapshots of tracks that are active and observed this frame.
    std::vector<ResultRow> step(int frame, const std::vector<Detection>& detections);

    const std::vector<Track>& tracks() const { return tracks_; }

   private:
    TrackerConfig cfg_;
    std::vector<Track> tracks_;
    int next_id_ = 1;
    long last_frame_ = -1;
    long first_frame_ = -1;

    void apply_match(Track& track, const Detection& det, int frame);
};

}  // namespace lmot::track
