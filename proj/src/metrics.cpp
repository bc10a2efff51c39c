#include "lmot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace lmot::metrics {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::array<double, kNumAlphas> alpha_grid() {
    std::array<double, kNumAlphas> g{};
    for (int i = 0; i < kNumAlphas; ++i) g[i] = 0.05 * (i + 1);
    return g;
}

std::vector<Entry> entries_from_gt(const io::ParsedTable& gt) {
    std::vector<Entry> out;
    out.reserve(gt.records.size());
    for (const auto& r : gt.records) out.push_back({r.frame, r.id, r.class_id, r.box()});
    return out;
}

std::vector<Entry> entries_from_result(const std::vector<track::ResultRow>& rows) {
    std::vector<Entry> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({r.frame, r.id, r.class_id, r.box});
    return out;
}

std::vector<std::pair<int, int>> match_frame(const std::vector<Entry>& gts, const std::vector<Entry>& preds,
                                             double alpha) {
    if (gts.empty() || preds.empty()) return {};
    std::vector<std::vector<double>> cost(gts.size(), std::vector<double>(preds.size(), kInf));
    for (std::size_t i = 0; i < gts.size(); ++i)
        for (std::size_t j = 0; j < preds.size(); ++j) {
            const double overlap = track::iou(gts[i].box, preds[j].box);
            if (overlap >= alpha) cost[i][j] = 1.0 - overlap;
        }
    return track::hungarian(cost).pairs;
}

namespace {

using FrameMap = std::map<int, std::vector<Entry>>;

FrameMap by_frame(const std::vector<Entry>& entries) {
    FrameMap m;
    for (const auto& e : entries) m[e.frame].push_back(e);
    return m;
}

// (gt index in frame, pred index in frame, iou) per frame for reuse across alphas
struct FramePairs {
    std::vector<Entry> gts, preds;
    std::vector<std::vector<double>> iou;  // gts x preds
};

std::vector<FramePairs> precompute(const std::vector<Entry>& gt, const std::vector<Entry>& pred) {
    FrameMap gm = by_frame(gt), pm = by_frame(pred);
    std::set<int> frames;
    for (const auto& [f, _] : gm) frames.insert(f);
    for (const auto& [f, _] : pm) frames.insert(f);
    std::vector<FramePairs> out;
    for (int f : frames) {
        FramePairs fp;
        if (auto it = gm.find(f); it != gm.end()) fp.gts = it->second;
        if (auto it = pm.find(f); it != pm.end()) fp.preds = it->second;
        fp.iou.assign(fp.gts.size(), std::vector<double>(fp.preds.size(), 0.0));
        for (std::size_t i = 0; i < fp.gts.size(); ++i)
            for (std::size_t j = 0; j < fp.preds.size(); ++j) {
                fp.iou[i][j] = track::iou(fp.gts[i].box, fp.preds[j].box);
            }
        out.push_back(std::move(fp));
    }
    return out;
}

struct HotaCounts {
    std::array<long, kNumAlphas> tp{}, fn{}, fp{};
    std::array<double, kNumAlphas> ass_sum{}, loc_sum{};
};

HotaCounts hota_counts(const std::vector<Entry>& gt, const std::vector<Entry>& pred) {
    const auto frames = precompute(gt, pred);
    const auto alphas = alpha_grid();
    HotaCounts out;

    std::map<int, long> gt_id_count, pred_id_count;
    for (const auto& e : gt) gt_id_count[e.id] += 1;
    for (const auto& e : pred) pred_id_count[e.id] += 1;

    for (int a = 0; a < kNumAlphas; ++a) {
        const double alpha = alphas[a];
        std::map<std::pair<int, int>, long> pair_tp;  // (gt id, pred id) -> TP count
        double loc_sum = 0.0;
        long tp = 0;
        for (const auto& f : frames) {
            if (f.gts.empty() || f.preds.empty()) continue;
            std::vector<std::vector<double>> cost(f.gts.size(), std::vector<double>(f.preds.size(), kInf));
            for (std::size_t i = 0; i < f.gts.size(); ++i)
                for (std::size_t j = 0; j < f.preds.size(); ++j) {
                    if (f.iou[i][j] >= alpha) cost[i][j] = 1.0 - f.iou[i][j];
                }
            for (auto [i, j] : track::hungarian(cost).pairs) {
                pair_tp[{f.gts[i].id, f.preds[j].id}] += 1;
                loc_sum += f.iou[i][j];
                ++tp;
            }
        }
        out.tp[a] = tp;
        out.fn[a] = static_cast<long>(gt.size()) - tp;
        out.fp[a] = static_cast<long>(pred.size()) - tp;
        out.loc_sum[a] = loc_sum;
        double ass = 0.0;
        for (const auto& [ids, m] : pair_tp) {
            const double denom =
                static_cast<double>(gt_id_count[ids.first] + pred_id_count[ids.second] - m);
            ass += static_cast<double>(m) * (static_cast<double>(m) / denom);
        }
        out.ass_sum[a] = ass;
    }
    return out;
}

HotaResult hota_from_counts(const std::array<long, kNumAlphas>& tp, const std::array<long, kNumAlphas>& fn,
                            const std::array<long, kNumAlphas>& fp,
                            const std::array<double, kNumAlphas>& ass_sum,
                            const std::array<double, kNumAlphas>& loc_sum, bool any_gt, bool any_pred) {
    HotaResult r;
    if (!any_gt && !any_pred) {
        r.empty_both = true;
        r.deta.fill(1.0);
        r.assa.fill(1.0);
        r.hota.fill(1.0);
        r.loca.fill(1.0);
        r.HOTA = r.DetA = r.AssA = r.LocA = 1.0;
        return r;
    }
    double hota_sum = 0, deta_sum = 0, assa_sum = 0, loca_sum = 0;
    for (int a = 0; a < kNumAlphas; ++a) {
        const long denom = tp[a] + fn[a] + fp[a];
        r.deta[a] = denom > 0 ? static_cast<double>(tp[a]) / denom : 0.0;
        r.assa[a] = tp[a] > 0 ? ass_sum[a] / tp[a] : 0.0;
        r.hota[a] = std::sqrt(r.deta[a] * r.assa[a]);
        r.loca[a] = tp[a] > 0 ? loc_sum[a] / tp[a] : 1.0;
        hota_sum += r.hota[a];
        deta_sum += r.deta[a];
        assa_sum += r.assa[a];
        loca_sum += r.loca[a];
    }
    r.HOTA = hota_sum / kNumAlphas;
    r.DetA = deta_sum / kNumAlphas;
    r.AssA = assa_sum / kNumAlphas;
    r.LocA = loca_sum / kNumAlphas;
    return r;
}

}  // namespace

HotaResult hota(const std::vector<Entry>& gt, const std::vector<Entry>& pred) {
    const HotaCounts c = hota_counts(gt, pred);
    return hota_from_counts(c.tp, c.fn, c.fp, c.ass_sum, c.loc_sum, !gt.empty(), !pred.empty());
}

ClearResult mota(const std::vector<Entry>& gt, const std::vector<Entry>& pred, double iou_thr) {
    const auto frames = precompute(gt, pred);
    ClearResult r;
    r.gt_count = static_cast<long>(gt.size());

    std::map<int, int> last_pred_of_gt;  // most recent matched pred id per gt id
    std::map<int, int> prev_frame_pairs;  // gt id -> pred id matched in previous frame
    for (const auto& f : frames) {
        std::map<int, int> cur_pairs;
        std::vector<char> gt_used(f.gts.size(), 0), pred_used(f.preds.size(), 0);
        long matched = 0;
        // persistence: keep previous-frame pairs still above threshold
        for (std::size_t i = 0; i < f.gts.size(); ++i) {
            auto it = prev_frame_pairs.find(f.gts[i].id);
            if (it == prev_frame_pairs.end()) continue;
            for (std::size_t j = 0; j < f.preds.size(); ++j) {
                if (!pred_used[j] && f.preds[j].id == it->second && f.iou[i][j] >= iou_thr) {
                    gt_used[i] = pred_used[j] = 1;
                    cur_pairs[f.gts[i].id] = f.preds[j].id;
                    ++matched;
                    break;
                }
            }
        }
        // hungarian on the remainder
        std::vector<int> gi, pj;
        for (std::size_t i = 0; i < f.gts.size(); ++i)
            if (!gt_used[i]) gi.push_back(static_cast<int>(i));
        for (std::size_t j = 0; j < f.preds.size(); ++j)
            if (!pred_used[j]) pj.push_back(static_cast<int>(j));
        if (!gi.empty() && !pj.empty()) {
            std::vector<std::vector<double>> cost(gi.size(), std::vector<double>(pj.size(), kInf));
            for (std::size_t a = 0; a < gi.size(); ++a)
                for (std::size_t b = 0; b < pj.size(); ++b) {
                    if (f.iou[gi[a]][pj[b]] >= iou_thr) cost[a][b] = 1.0 - f.iou[gi[a]][pj[b]];
                }
            for (auto [a, b] : track::hungarian(cost).pairs) {
                cur_pairs[f.gts[gi[a]].id] = f.preds[pj[b]].id;
                ++matched;
            }
        }
        r.fn += static_cast<long>(f.gts.size()) - matched;
        r.fp += static_cast<long>(f.preds.size()) - matched;
        for (const auto& [gid, pid] : cur_pairs) {
            auto it = last_pred_of_gt.find(gid);
            if (it != last_pred_of_gt.end() && it->second != pid) r.idsw += 1;
            last_pred_of_gt[gid] = pid;
        }
        prev_frame_pairs = cur_pairs;
    }
    if (r.gt_count == 0) {
        r.defined = false;
        r.mota = std::numeric_limits<double>::quiet_NaN();
    } else {
        r.mota = 1.0 - static_cast<double>(r.fn + r.fp + r.idsw) / static_cast<double>(r.gt_count);
    }
    return r;
}

Idf1Result idf1(const std::vector<Entry>& gt, const std::vector<Entry>& pred, double iou_thr) {
    const auto frames = precompute(gt, pred);
    // per (gt id, pred id): count of frames where both appear with IoU >= thr
    // under a per-frame exclusive matching is NOT required by IDF1; the global
    // trajectory matching uses raw per-frame overlap counts.
    std::map<int, long> gt_count, pred_count;
    for (const auto& e : gt) gt_count[e.id] += 1;
    for (const auto& e : pred) pred_count[e.id] += 1;
    std::map<std::pair<int, int>, long> overlap;
    for (const auto& f : frames) {
        for (std::size_t i = 0; i < f.gts.size(); ++i)
            for (std::size_t j = 0; j < f.preds.size(); ++j) {
                if (f.iou[i][j] >= iou_thr) overlap[{f.gts[i].id, f.preds[j].id}] += 1;
            }
    }
    std::vector<int> gids, pids;
    for (const auto& [id, _] : gt_count) gids.push_back(id);
    for (const auto& [id, _] : pred_count) pids.push_back(id);
    Idf1Result r;
    long idtp = 0;
    if (!gids.empty() && !pids.empty()) {
        std::vector<std::vector<double>> cost(gids.size(), std::vector<double>(pids.size(), kInf));
        for (std::size_t i = 0; i < gids.size(); ++i)
            for (std::size_t j = 0; j < pids.size(); ++j) {
                auto it = overlap.find({gids[i], pids[j]});
                if (it != overlap.end() && it->second > 0) cost[i][j] = -static_cast<double>(it->second);
            }
        for (auto [i, j] : track::hungarian(cost).pairs) {
            idtp += overlap[{gids[i], pids[j]}];
        }
    }
    r.idtp = idtp;
    r.idfn = static_cast<long>(gt.size()) - idtp;
    r.idfp = static_cast<long>(pred.size()) - idtp;
    const long denom = 2 * r.idtp + r.idfp + r.idfn;
    r.idf1 = denom > 0 ? 2.0 * static_cast<double>(r.idtp) / denom : 1.0;
    return r;
}

ClassCounts evaluate_class(const std::vector<Entry>& gt, const std::vector<Entry>& pred, int class_id,
                           double clear_iou_thr) {
    ClassCounts c;
    c.class_id = class_id;
    c.gt_dets = static_cast<long>(gt.size());
    c.pred_dets = static_cast<long>(pred.size());
    const HotaCounts hc = hota_counts(gt, pred);
    c.tp = hc.tp;
    c.fn = hc.fn;
    c.fp = hc.fp;
    c.ass_sum = hc.ass_sum;
    c.loc_sum = hc.loc_sum;
    const ClearResult cl = mota(gt, pred, clear_iou_thr);
    c.clear_fp = cl.fp;
    c.clear_fn = cl.fn;
    c.clear_idsw = cl.idsw;
    const Idf1Result idr = idf1(gt, pred, clear_iou_thr);
    c.idtp = idr.idtp;
    c.idfp = idr.idfp;
    c.idfn = idr.idfn;
    return c;
}

namespace {

EvalScalars scalars_from_counts(const ClassCounts& c) {
    EvalScalars s;
    const HotaResult h =
        hota_from_counts(c.tp, c.fn, c.fp, c.ass_sum, c.loc_sum, c.gt_dets > 0, c.pred_dets > 0);
    s.hota = h.HOTA;
    s.deta = h.DetA;
    s.assa = h.AssA;
    s.loca = h.LocA;
    s.hota_alpha = h.hota;
    s.deta_alpha = h.deta;
    s.assa_alpha = h.assa;
    s.fp = c.clear_fp;
    s.fn = c.clear_fn;
    s.idsw = c.clear_idsw;
    if (c.gt_dets > 0) {
        s.mota = 1.0 - static_cast<double>(c.clear_fn + c.clear_fp + c.clear_idsw) /
                           static_cast<double>(c.gt_dets);
    } else {
        s.mota_defined = false;
        s.mota = std::numeric_limits<double>::quiet_NaN();
    }
    const long denom = 2 * c.idtp + c.idfp + c.idfn;
    s.idf1 = denom > 0 ? 2.0 * static_cast<double>(c.idtp) / denom : 1.0;
    return s;
}

}  // namespace

EvalScalars combine_classes(const std::vector<ClassCounts>& per_class, CombineMode mode) {
    std::vector<const ClassCounts*> present;
    for (const auto& c : per_class) {
        if (c.gt_dets > 0) present.push_back(&c);
    }
    if (present.empty()) {
        EvalScalars s;
        s.mota_defined = false;
        s.mota = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    if (mode == CombineMode::DetAvg) {
        ClassCounts pooled;
        pooled.class_id = -1;
        for (const auto* c : present) {
            pooled.gt_dets += c->gt_dets;
            pooled.pred_dets += c->pred_dets;
            for (int a = 0; a < kNumAlphas; ++a) {
                pooled.tp[a] += c->tp[a];
                pooled.fn[a] += c->fn[a];
                pooled.fp[a] += c->fp[a];
                pooled.ass_sum[a] += c->ass_sum[a];
                pooled.loc_sum[a] += c->loc_sum[a];
            }
            pooled.clear_fp += c->clear_fp;
            pooled.clear_fn += c->clear_fn;
            pooled.clear_idsw += c->clear_idsw;
            pooled.idtp += c->idtp;
            pooled.idfp += c->idfp;
            pooled.idfn += c->idfn;
        }
        return scalars_from_counts(pooled);
    }
    // class_avg: unweighted mean of per-class scalars
    EvalScalars acc;
    for (const auto* c : present) {
        const EvalScalars s = scalars_from_counts(*c);
        acc.hota += s.hota;
        acc.deta += s.deta;
        acc.assa += s.assa;
        acc.loca += s.loca;
        acc.mota += s.mota;
        acc.idf1 += s.idf1;
        acc.fp += s.fp;
        acc.fn += s.fn;
        acc.idsw += s.idsw;
        for (int a = 0; a < kNumAlphas; ++a) {
            acc.hota_alpha[a] += s.hota_alpha[a];
            acc.deta_alpha[a] += s.deta_alpha[a];
            acc.assa_alpha[a] += s.assa_alpha[a];
        }
    }
    const double n = static_cast<double>(present.size());
    acc.hota /= n;
    acc.deta /= n;
    acc.assa /= n;
    acc.loca /= n;
    acc.mota /= n;
    acc.idf1 /= n;
    for (int a = 0; a < kNumAlphas; ++a) {
        acc.hota_alpha[a] /= n;
        acc.deta_alpha[a] /= n;
        acc.assa_alpha[a] /= n;
    }
    return acc;
}

EvalReport evaluate(const io::ParsedTable& gt, const std::vector<track::ResultRow>& pred, CombineMode mode,
                    double clear_iou_thr, double min_visibility) {
    io::ParsedTable filtered;
    filtered.rejected = gt.rejected;
    for (const auto& r : gt.records) {
        if (r.visibility >= min_visibility) filtered.records.push_back(r);
    }
    std::vector<Entry> gt_entries = entries_from_gt(filtered);
    std::vector<Entry> pred_entries = entries_from_result(pred);

    EvalReport report;
    report.mode = mode;
    report.class_agnostic =
        std::all_of(pred_entries.begin(), pred_entries.end(), [](const Entry& e) { return e.class_id <= 0; });

    if (report.class_agnostic) {
        report.per_class.push_back(evaluate_class(gt_entries, pred_entries, -1, clear_iou_thr));
    } else {
        std::set<int> gt_classes, pred_classes;
        for (const auto& e : gt_entries) gt_classes.insert(e.class_id);
        for (const auto& e : pred_entries) pred_classes.insert(e.class_id);
        for (int cls : pred_classes) {
            if (!gt_classes.count(cls)) report.excluded_classes.push_back(cls);
        }
        for (int cls : gt_classes) {
            std::vector<Entry> g, p;
            for (const auto& e : gt_entries)
                if (e.class_id == cls) g.push_back(e);
            for (const auto& e : pred_entries)
                if (e.class_id == cls) p.push_back(e);
            report.per_class.push_back(evaluate_class(g, p, cls, clear_iou_thr));
        }
    }
    report.scalars = combine_classes(report.per_class, mode);
    return report;
}

std::string format_report(const EvalReport& report) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    const EvalScalars& s = report.scalars;
    os << "mode: " << (report.mode == CombineMode::DetAvg ? "det_avg" : "class_avg")
       << (report.class_agnostic ? " (class-agnostic)" : "") << "\n";
    os << "HOTA  DetA  AssA  LocA  MOTA  IDF1  IDSW  FP    FN\n";
    os << s.hota << " " << s.deta << " " << s.assa << " " << s.loca << " ";
    if (s.mota_defined) {
        os << s.mota;
    } else {
        os << "nan";
    }
    os << " " << s.idf1 << " " << s.idsw << " " << s.fp << " " << s.fn << "\n";
    if (!report.excluded_classes.empty()) {
        os << "warning: classes absent from gt excluded:";
        for (int c : report.excluded_classes) os << " " << c;
        os << "\n";
    }
    return os.str();
}

std::string format_report_kv(const EvalReport& report) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    const EvalScalars& s = report.scalars;
    os << "mode=" << (report.mode == CombineMode::DetAvg ? "det_avg" : "class_avg") << "\n";
    os << "hota=" << s.hota << "\ndeta=" << s.deta << "\nassa=" << s.assa << "\nloca=" << s.loca << "\n";
    os << "mota=" << (s.mota_defined ? std::to_string(s.mota) : "nan") << "\n";
    os << "idf1=" << s.idf1 << "\nidsw=" << s.idsw << "\nfp=" << s.fp << "\nfn=" << s.fn << "\n";
    const auto alphas = alpha_grid();
    for (int a = 0; a < kNumAlphas; ++a) {
        os << "hota_alpha_" << alphas[a] << "=" << s.hota_alpha[a] << "\n";
    }
    return os.str();
}

}  // namespace lmot::metrics
