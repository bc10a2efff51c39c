#include "lmot/kalman.hpp"

#include <algorithm>
#include <cmath>

namespace lmot::track {

double iou(const BBox& a, const BBox& b) {
    if (!a.valid() || !b.valid()) throw ContractViolation("iou: invalid box");
    const double x1 = std::max(a.x, b.x);
    const double y1 = std::max(a.y, b.y);
    const double x2 = std::min(a.x + a.w, b.x + b.w);
    const double y2 = std::min(a.y + a.h, b.y + b.h);
    const double iw = std::max(0.0, x2 - x1);
    const double ih = std::max(0.0, y2 - y1);
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

namespace {

using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Vec4 = Eigen::Matrix<double, 4, 1>;

Mat8 transition() {
    Mat8 f = Mat8::Identity();
    for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
    return f;
}

Vec8 process_std(double h, const KalmanParams& p) {
    Vec8 s;
    s << p.std_weight_position * h, p.std_weight_position * h, p.std_aspect_process,
        p.std_weight_position * h, p.std_weight_velocity * h, p.std_weight_velocity * h, p.std_aspect_vel,
        p.std_weight_velocity * h;
    return s;
}

}  // namespace

KalmanState kf_init(const BBox& box, const KalmanParams& p) {
    if (!box.valid()) throw ContractViolation("kf_init: invalid box");
    KalmanState s;
    s.mean << box.cx(), box.cy(), box.aspect(), box.h, 0, 0, 0, 0;
    Vec8 std;
    std << 2 * p.std_weight_position * box.h, 2 * p.std_weight_position * box.h, p.std_aspect_init,
        2 * p.std_weight_position * box.h, 10 * p.std_weight_velocity * box.h,
        10 * p.std_weight_velocity * box.h, p.std_aspect_vel, 10 * p.std_weight_velocity * box.h;
    s.cov = std.cwiseProduct(std).asDiagonal();
    return s;
}

void kf_predict(KalmanState& s, const KalmanParams& p) {
    const Mat8 f = transition();
    const Vec8 q = process_std(s.mean(3), p);
    s.mean = f * s.mean;
    s.cov = f * s.cov * f.transpose();
    s.cov += Mat8(q.cwiseProduct(q).asDiagonal());
    s.cov = ((s.cov + s.cov.transpose()) / 2.0).eval();
}

void kf_update(KalmanState& s, const BBox& box, const KalmanParams& p) {
    if (!box.valid()) throw ContractViolation("kf_update: invalid box");
    Eigen::Matrix<double, 4, 8> h = Eigen::Matrix<double, 4, 8>::Zero();
    for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
    Vec4 r_std;
    r_std << p.std_weight_position * s.mean(3), p.std_weight_position * s.mean(3), p.std_aspect_meas,
        p.std_weight_position * s.mean(3);
    const Mat4 r = r_std.cwiseProduct(r_std).asDiagonal();

    Vec4 z;
    z << box.cx(), box.cy(), box.aspect(), box.h;
    const Vec4 innovation = z - h * s.mean;
    Mat4 innov_cov = h * s.cov * h.transpose() + r;
    Eigen::LLT<Mat4> llt(innov_cov);
    if (llt.info() != Eigen::Success) {
        innov_cov += 1e-9 * Mat4::Identity();
        llt.compute(innov_cov);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("kf_update: innovation covariance not positive definite");
        }
    }
    const Eigen::Matrix<double, 8, 4> gain = llt.solve((h * s.cov.transpose()).eval()).transpose();
    s.mean += gain * innovation;
    s.cov = ((Mat8::Identity() - gain * h) * s.cov).eval();
    s.cov = ((s.cov + s.cov.transpose()) / 2.0).eval();
}

}  // namespace lmot::track
