#pragma once

#include <Eigen/Dense>

#include "lmot/errors.hpp"

namespace lmot::track {

struct BBox {
    double x = 0, y = 0, w = 0, h = 0;  // top-left + size, pixels

    bool valid() const { return w > 0 && h > 0; }
    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }
    double aspect() const { return w / h; }
    double area() const { return w * h; }

    static BBox from_cxcyah(double cx, double cy, double a, double h) {
        return {cx - a * h / 2.0, cy - h / 2.0, a * h, h};
    }
};

double iou(const BBox& a, const BBox& b);

/// SORT-family noise scaling: position/measurement stds proportional to box height.
struct KalmanParams {
    double std_weight_position = 1.0 / 20.0;
    double std_weight_velocity = 1.0 / 160.0;
    double std_aspect_init = 1e-2;
    double std_aspect_process = 1e-2;
    double std_aspect_vel = 1e-5;
    double std_aspect_meas = 1e-1;
};

/// Constant-velocity state over (cx, cy, a, h), a = w/h.
struct KalmanState {
    Eigen::Matrix<double, 8, 1> mean = Eigen::Matrix<double, 8, 1>::Zero();
    Eigen::Matrix<double, 8, 8> cov = Eigen::Matrix<double, 8, 8>::Zero();

    BBox box() const { return BBox::from_cxcyah(mean(0), mean(1), mean(2), mean(3)); }
};

KalmanState kf_init(const BBox& box, const KalmanParams& params = {});

/// One-frame constant-velocity transition; cov <- F P F^T + Q.
void kf_predict(KalmanState& state, const KalmanParams& params = {});

/// Standard-form correction on the (cx, cy, a, h) measurement, symmetrized
/// posterior covariance; near-singular innovation is regularized with 1e-9 I.
void kf_update(KalmanState& state, const BBox& box, const KalmanParams& params = {});

}  // namespace lmot::track
