#pragma once

#include <array>
#include <string>
#include <vector>

#include "lmot/mot_io.hpp"
#include "lmot/tracker.hpp"

namespace lmot::metrics {

/// The 19-point overlap-threshold grid {0.05, 0.10, ..., 0.95}.
constexpr int kNumAlphas = 19;
std::array<double, kNumAlphas> alpha_grid();

struct Entry {
    int frame = 0;
    int id = 0;
    int class_id = -1;
    track::BBox box;
};

std::vector<Entry> entries_from_gt(const io::ParsedTable& gt);
std::vector<Entry> entries_from_result(const std::vector<track::ResultRow>& rows);

/// Maximum-cardinality then maximum-total-IoU matching among pairs with
/// IoU >= alpha; single frame, single class. Returns (gt index, pred index).
std::vector<std::pair<int, int>> match_frame(const std::vector<Entry>& gts, const std::vector<Entry>& preds,
                                             double alpha);

struct HotaResult {
    std::array<double, kNumAlphas> deta{}, assa{}, hota{}, loca{};
    double HOTA = 0, DetA = 0, AssA = 0, LocA = 0;
    bool empty_both = false;  // no gt and no pred: defined as perfect, flagged
};

HotaResult hota(const std::vector<Entry>& gt, const std::vector<Entry>& pred);

struct ClearResult {
    double mota = 0;
    long fp = 0, fn = 0, idsw = 0, gt_count = 0;
    bool defined = true;  // false when gt is empty (MOTA reported as NaN)
};

/// Frame-sequential CLEAR matching with previous-pair persistence.
ClearResult mota(const std::vector<Entry>& gt, const std::vector<Entry>& pred, double iou_thr = 0.5);

struct Idf1Result {
    double idf1 = 0;
    long idtp = 0, idfp = 0, idfn = 0;
};

Idf1Result idf1(const std::vector<Entry>& gt, const std::vector<Entry>& pred, double iou_thr = 0.5);

/// Raw per-class counts sufficient to re-aggregate every metric.
struct ClassCounts {
    int class_id = -1;
    long gt_dets = 0, pred_dets = 0;
    std::array<long, kNumAlphas> tp{}, fn{}, fp{};
    std::array<double, kNumAlphas> ass_sum{};  // sum of A(c) over TPs
    std::array<double, kNumAlphas> loc_sum{};  // sum of IoU over TPs
    long clear_fp = 0, clear_fn = 0, clear_idsw = 0;
    long idtp = 0, idfp = 0, idfn = 0;
};

ClassCounts evaluate_class(const std::vector<Entry>& gt, const std::vector<Entry>& pred, int class_id,
                           double clear_iou_thr = 0.5);

enum class CombineMode { ClassAvg, DetAvg };

struct EvalScalars {
    double hota = 0, deta = 0, assa = 0, loca = 0, mota = 0, idf1 = 0;
    long idsw = 0, fp = 0, fn = 0;
    bool mota_defined = true;
    std::array<double, kNumAlphas> hota_alpha{}, deta_alpha{}, assa_alpha{};
};

EvalScalars combine_classes(const std::vector<ClassCounts>& per_class, CombineMode mode);

struct EvalReport {
    EvalScalars scalars;
    std::vector<ClassCounts> per_class;
    std::vector<int> excluded_classes;  // classes present only in predictions
    CombineMode mode = CombineMode::DetAvg;
    bool class_agnostic = false;
};

/// Full evaluation. If every prediction carries class_id <= 0 the run is
/// class-agnostic: all classes are pooled into one.
EvalReport evaluate(const io::ParsedTable& gt, const std::vector<track::ResultRow>& pred,
                    CombineMode mode = CombineMode::DetAvg, double clear_iou_thr = 0.5,
                    double min_visibility = 0.0);

std::string format_report(const EvalReport& report);
std::string format_report_kv(const EvalReport& report);

}  // namespace lmot::metrics
