#include "lmot/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace lmot::track {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size() || u.empty()) {
        throw ContractViolation("cosine_distance: dimension mismatch");
    }
    double nu = 0, nv = 0, dot = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        nu += u[i] * u[i];
        nv += v[i] * v[i];
        dot += u[i] * v[i];
    }
    if (std::abs(std::sqrt(nu) - 1.0) > 1e-6 || std::abs(std::sqrt(nv) - 1.0) > 1e-6) {
        throw ContractViolation("cosine_distance: inputs must be unit-norm");
    }
    return 1.0 - dot;
}

void TrackerConfig::validate() const {
    if (!(0 <= tau_low && tau_low < tau_high && tau_high <= 1)) {
        throw ContractViolation("tracker config: need 0 <= tau_low < tau_high <= 1");
    }
    if (interp_max_gap < 0) throw ContractViolation("tracker config: interp_max_gap must be >= 0");
    if (appearance_weight < 0 || appearance_weight > 1) {
        throw ContractViolation("tracker config: appearance_weight in [0,1]");
    }
    if (max_age < 1 || min_hits < 1) throw ContractViolation("tracker config: max_age/min_hits >= 1");
}

namespace {

double pair_cost_stage1(const Track& t, const Detection& d, const TrackerConfig& cfg) {
    if (t.class_id != d.class_id) return kInf;
    const double overlap = iou(t.state.box(), d.box);
    if (overlap < cfg.iou_gate_stage1) return kInf;
    double cost;
    if (cfg.appearance_weight > 0 && !t.smoothed_embedding.empty() && !d.embedding.empty()) {
        cost = (1.0 - cfg.appearance_weight) * (1.0 - overlap) +
               cfg.appearance_weight * cosine_distance(t.smoothed_embedding, d.embedding);
    } else {
        cost = 1.0 - overlap;
    }
    if (cfg.ocm_weight > 0) {
        const double vx = t.state.mean(4), vy = t.state.mean(5);
        const double speed = std::hypot(vx, vy);
        const double dx = d.box.cx() - t.last_observation.box.cx();
        const double dy = d.box.cy() - t.last_observation.box.cy();
        const double disp = std::hypot(dx, dy);
        if (speed > 1e-9 && disp > 1e-9) {
            const double cos_theta = (vx * dx + vy * dy) / (speed * disp);
            cost += cfg.ocm_weight * (1.0 - cos_theta);
        }
    }
    return cost;
}

}  // namespace

AssociationResult associate_two_stage(const std::vector<Track>& tracks,
                                      const std::vector<Detection>& detections, const TrackerConfig& cfg) {
    cfg.validate();
    for (std::size_t i = 1; i < detections.size(); ++i) {
        if (detections[i].frame != detections[0].frame) {
            throw ContractViolation("associate_two_stage: detections span multiple frames");
        }
    }

    std::vector<int> high_dets, low_dets;
    for (int i = 0; i < static_cast<int>(detections.size()); ++i) {
        const double s = detections[i].score;
        if (s >= cfg.tau_high) {
            high_dets.push_back(i);
        } else if (s >= cfg.tau_low) {
            low_dets.push_back(i);
        }
    }

    std::vector<int> alive;
    for (int i = 0; i < static_cast<int>(tracks.size()); ++i) {
        if (tracks[i].status != TrackStatus::Removed) alive.push_back(i);
    }

    AssociationResult out;
    std::set<int> matched_tracks, matched_high;

    // stage 1: every alive track vs high-confidence detections
    if (!alive.empty() && !high_dets.empty()) {
        std::vector<std::vector<double>> cost(alive.size(), std::vector<double>(high_dets.size()));
        for (std::size_t r = 0; r < alive.size(); ++r)
            for (std::size_t c = 0; c < high_dets.size(); ++c) {
                cost[r][c] = pair_cost_stage1(tracks[alive[r]], detections[high_dets[c]], cfg);
            }
        for (auto [r, c] : hungarian(cost).pairs) {
            out.matches.emplace_back(alive[r], high_dets[c]);
            matched_tracks.insert(alive[r]);
            matched_high.insert(high_dets[c]);
        }
    }

    // stage 2: remaining non-lost tracks vs low-confidence detections, IoU only
    std::vector<int> stage2_tracks;
    for (int i : alive) {
        if (!matched_tracks.count(i) && tracks[i].status != TrackStatus::Lost) stage2_tracks.push_back(i);
    }
    if (!stage2_tracks.empty() && !low_dets.empty()) {
        std::vector<std::vector<double>> cost(stage2_tracks.size(), std::vector<double>(low_dets.size()));
        for (std::size_t r = 0; r < stage2_tracks.size(); ++r)
            for (std::size_t c = 0; c < low_dets.size(); ++c) {
                const Track& t = tracks[stage2_tracks[r]];
                const Detection& d = detections[low_dets[c]];
                if (t.class_id != d.class_id) {
                    cost[r][c] = kInf;
                    continue;
                }
                const double overlap = iou(t.state.box(), d.box);
                cost[r][c] = overlap >= cfg.iou_gate_stage2 ? 1.0 - overlap : kInf;
            }
        for (auto [r, c] : hungarian(cost).pairs) {
            out.matches.emplace_back(stage2_tracks[r], low_dets[c]);
            matched_tracks.insert(stage2_tracks[r]);
        }
    }

    for (int i : alive) {
        if (!matched_tracks.count(i)) out.unmatched_tracks.push_back(i);
    }
    for (int i : high_dets) {
        if (!matched_high.count(i)) out.unmatched_dets_high.push_back(i);
    }
    std::sort(out.matches.begin(), out.matches.end());
    return out;
}

void oru_reupdate(Track& track, const Detection& new_obs, const TrackerConfig& cfg) {
    if (track.status != TrackStatus::Lost) {
        throw ContractViolation("oru_reupdate: track must be lost");
    }
    const int gap = new_obs.frame - track.last_observation.frame;
    if (gap < 2) throw ContractViolation("oru_reupdate: gap must be >= 2");

    const BBox& b0 = track.last_observation.box;
    const BBox& b1 = new_obs.box;
    const double c0x = b0.cx(), c0y = b0.cy(), a0 = b0.aspect(), h0 = b0.h;
    const double c1x = b1.cx(), c1y = b1.cy(), a1 = b1.aspect(), h1 = b1.h;

    KalmanState state = track.state_at_last_obs;
    for (int k = 1; k < gap; ++k) {
        const double f = static_cast<double>(k) / gap;
        const BBox virt = BBox::from_cxcyah(c0x + f * (c1x - c0x), c0y + f * (c1y - c0y),
                                            a0 + f * (a1 - a0), h0 + f * (h1 - h0));
        kf_predict(state, cfg.kalman);
        kf_update(state, virt, cfg.kalman);
    }
    kf_predict(state, cfg.kalman);
    kf_update(state, b1, cfg.kalman);
    track.state = state;
}

std::vector<ResultRow> linear_interpolation(std::vector<ResultRow> rows, int max_gap) {
    std::map<int, std::vector<ResultRow>> by_id;
    for (const auto& r : rows) by_id[r.id].push_back(r);
    std::vector<ResultRow> out;
    for (auto& [id, track_rows] : by_id) {
        std::sort(track_rows.begin(), track_rows.end(),
                  [](const ResultRow& a, const ResultRow& b) { return a.frame < b.frame; });
        for (std::size_t i = 0; i + 1 < track_rows.size(); ++i) {
            if (track_rows[i + 1].frame <= track_rows[i].frame) {
                throw ContractViolation("linear_interpolation: frames not strictly increasing for id " +
                                        std::to_string(id));
            }
        }
        for (std::size_t i = 0; i + 1 < track_rows.size(); ++i) {
            const ResultRow& a = track_rows[i];
            const ResultRow& b = track_rows[i + 1];
            const int gap = b.frame - a.frame;
            out.push_back(a);
            if (gap > 1 && gap <= max_gap) {
                for (int f = a.frame + 1; f < b.frame; ++f) {
                    const double t = static_cast<double>(f - a.frame) / gap;
                    ResultRow r;
                    r.frame = f;
                    r.id = id;
                    r.class_id = a.class_id;
                    r.box = {a.box.x + t * (b.box.x - a.box.x), a.box.y + t * (b.box.y - a.box.y),
                             a.box.w + t * (b.box.w - a.box.w), a.box.h + t * (b.box.h - a.box.h)};
                    r.score = a.score + t * (b.score - a.score);
                    out.push_back(r);
                }
            }
        }
        out.push_back(track_rows.back());
    }
    std::sort(out.begin(), out.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.frame, a.id) < std::tie(b.frame, b.id);
    });
    return out;
}

TrackerEngine::TrackerEngine(TrackerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void TrackerEngine::apply_match(Track& track, const Detection& det, int frame) {
    const int gap = det.frame - track.last_observation.frame;
    if (track.status == TrackStatus::Lost && gap >= 2 && cfg_.use_oru) {
        oru_reupdate(track, det, cfg_);
    } else {
        kf_update(track.state, det.box, cfg_.kalman);
    }
    track.time_since_update = 0;
    track.hits += 1;
    if (track.status == TrackStatus::Lost) {
        track.status = TrackStatus::Active;
    } else if (track.status == TrackStatus::Tentative && track.hits >= cfg_.min_hits) {
        track.status = TrackStatus::Active;
    }
    track.last_observation = det;
    track.state_at_last_obs = track.state;
    track.history.emplace_back(frame, track.state.box(), det.score);
    if (!det.embedding.empty()) {
        if (track.smoothed_embedding.empty()) {
            track.smoothed_embedding = det.embedding;
        } else {
            double norm = 0;
            for (std::size_t i = 0; i < det.embedding.size(); ++i) {
                track.smoothed_embedding[i] =
                    cfg_.ema_momentum * track.smoothed_embedding[i] + (1 - cfg_.ema_momentum) * det.embedding[i];
                norm += track.smoothed_embedding[i] * track.smoothed_embedding[i];
            }
            norm = std::sqrt(norm);
            if (norm > 1e-12) {
                for (double& v : track.smoothed_embedding) v /= norm;
            }
        }
    }
}

std::vector<ResultRow> TrackerEngine::step(int frame, const std::vector<Detection>& detections) {
    if (frame <= last_frame_) {
        throw ContractViolation("step: frames must be strictly increasing, got " + std::to_string(frame) +
                                " after " + std::to_string(last_frame_));
    }
    for (const auto& d : detections) {
        if (d.frame != frame) throw ContractViolation("step: detection frame mismatch");
        if (!d.box.valid()) throw ContractViolation("step: invalid detection box");
    }
    if (first_frame_ < 0) first_frame_ = frame;
    last_frame_ = frame;

    for (Track& t : tracks_) {
        if (t.status == TrackStatus::Removed) continue;
        kf_predict(t.state, cfg_.kalman);
        t.age += 1;
        t.time_since_update += 1;
    }

    const AssociationResult assoc = associate_two_stage(tracks_, detections, cfg_);

    for (auto [ti, di] : assoc.matches) {
        apply_match(tracks_[ti], detections[di], frame);
    }
    for (int ti : assoc.unmatched_tracks) {
        Track& t = tracks_[ti];
        if (t.status == TrackStatus::Tentative) {
            t.status = TrackStatus::Removed;
        } else {
            t.status = TrackStatus::Lost;
            if (t.time_since_update > cfg_.max_age) t.status = TrackStatus::Removed;
        }
    }
    for (int di : assoc.unmatched_dets_high) {
        const Detection& d = detections[di];
        Track t;
        t.id = next_id_++;
        t.class_id = d.class_id;
        t.state = kf_init(d.box, cfg_.kalman);
        t.status = frame == first_frame_ ? TrackStatus::Active : TrackStatus::Tentative;
        t.hits = 1;
        t.age = 1;
        t.time_since_update = 0;
        t.last_observation = d;
        t.state_at_last_obs = t.state;
        t.history.emplace_back(frame, t.state.box(), d.score);
        t.smoothed_embedding = d.embedding;
        tracks_.push_back(std::move(t));
    }

    std::vector<ResultRow> out;
    for (const Track& t : tracks_) {
        if (t.status == TrackStatus::Active && t.time_since_update == 0) {
            out.push_back({frame, t.id, t.state.box(), t.last_observation.score, t.class_id});
        }
    }
    std::sort(out.begin(), out.end(), [](const ResultRow& a, const ResultRow& b) { return a.id < b.id; });
    return out;
}

}  // namespace lmot::track
