#include "lmot/mot_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace lmot::io {

namespace fs = std::filesystem;

const std::array<const char*, 7> kClassNames = {"", "person", "bicycle", "car", "motorcycle", "bus", "truck"};

namespace {

std::vector<double> split_csv_line(const std::string& line, const std::string& path, int line_no) {
    std::vector<double> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t comma = line.find(',', start);
        const std::string tok =
            line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            // allow trailing whitespace only
            for (std::size_t i = used; i < tok.size(); ++i) {
                if (!std::isspace(static_cast<unsigned char>(tok[i]))) throw std::invalid_argument(tok);
            }
            fields.push_back(v);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad field '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fn(line, line_no);
    }
}

}  // namespace

ParsedTable parse_gt(const std::string& path) {
    ParsedTable out;
    for_each_line(path, [&](const std::string& line, int line_no) {
        const auto f = split_csv_line(line, path, line_no);
        if (f.size() != 9) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 9 fields, got " +
                             std::to_string(f.size()));
        }
        AnnotationRecord r;
        r.frame = static_cast<int>(f[0]);
        r.id = static_cast<int>(f[1]);
        r.x = f[2];
        r.y = f[3];
        r.w = f[4];
        r.h = f[5];
        r.conf = f[6];
        r.class_id = static_cast<int>(f[7]);
        r.visibility = f[8];
        if (r.frame < 1) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": frame must be >= 1");
        }
        if (r.w <= 0 || r.h <= 0) {
            out.rejected += 1;
            return;
        }
        out.records.push_back(r);
    });
    std::sort(out.records.begin(), out.records.end(), [](const AnnotationRecord& a, const AnnotationRecord& b) {
        return std::tie(a.frame, a.id) < std::tie(b.frame, b.id);
    });
    return out;
}

std::vector<track::Detection> parse_det(const std::string& path) {
    std::vector<track::Detection> out;
    for_each_line(path, [&](const std::string& line, int line_no) {
        const auto f = split_csv_line(line, path, line_no);
        if (f.size() != 10) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 10 fields, got " +
                             std::to_string(f.size()));
        }
        if (f[0] < 1) throw ParseError(path + ":" + std::to_string(line_no) + ": frame must be >= 1");
        if (f[4] <= 0 || f[5] <= 0) return;  // non-positive box, skip
        track::Detection d;
        d.frame = static_cast<int>(f[0]);
        d.box = {f[2], f[3], f[4], f[5]};
        d.score = f[6];
        d.class_id = static_cast<int>(f[7]);
        out.push_back(std::move(d));
    });
    std::stable_sort(out.begin(), out.end(),
                     [](const track::Detection& a, const track::Detection& b) { return a.frame < b.frame; });
    return out;
}

void write_result(const std::vector<track::ResultRow>& rows, const std::string& path) {
    std::vector<track::ResultRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](const track::ResultRow& a, const track::ResultRow& b) {
        return std::tie(a.frame, a.id) < std::tie(b.frame, b.id);
    });
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    char buf[256];
    for (const auto& r : sorted) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.2f,%.2f,%.2f,%.2f,%.2f,%d,-1,-1\n", r.frame, r.id, r.box.x,
                      r.box.y, r.box.w, r.box.h, r.score, r.class_id);
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

std::vector<track::ResultRow> parse_result(const std::string& path) {
    std::vector<track::ResultRow> out;
    for_each_line(path, [&](const std::string& line, int line_no) {
        const auto f = split_csv_line(line, path, line_no);
        if (f.size() != 10) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 10 fields, got " +
                             std::to_string(f.size()));
        }
        track::ResultRow r;
        r.frame = static_cast<int>(f[0]);
        r.id = static_cast<int>(f[1]);
        r.box = {f[2], f[3], f[4], f[5]};
        r.score = f[6];
        r.class_id = static_cast<int>(f[7]);
        out.push_back(r);
    });
    return out;
}

Sequence load_sequence(const std::string& dir) {
    Sequence seq;
    fs::path root(dir);
    fs::path info = root / "seqinfo";
    if (!fs::exists(info)) info = root / "seqinfo.ini";
    if (!fs::exists(info)) throw FormatError(dir + ": missing seqinfo file");

    std::ifstream f(info);
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '[' || line[0] == '#' || line[0] == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
        };
        trim(key);
        trim(val);
        std::transform(key.begin(), key.end(), key.begin(), ::tolower);
        try {
            if (key == "name") seq.meta.name = val;
            else if (key == "fps" || key == "framerate") seq.meta.fps = std::stod(val);
            else if (key == "width" || key == "imwidth") seq.meta.width = std::stoi(val);
            else if (key == "height" || key == "imheight") seq.meta.height = std::stoi(val);
            else if (key == "length" || key == "seqlength") seq.meta.length = std::stoi(val);
            else if (key == "split") seq.meta.split = val;
        } catch (const std::exception&) {
            throw FormatError(info.string() + ": bad value for key '" + key + "'");
        }
    }
    if (seq.meta.length < 1) throw FormatError(info.string() + ": length must be >= 1");

    if (fs::exists(root / "gt" / "gt.txt")) seq.gt = parse_gt((root / "gt" / "gt.txt").string());
    if (fs::exists(root / "det" / "det.txt")) seq.det = parse_det((root / "det" / "det.txt").string());

    const fs::path raw_dir = root / "raw";
    if (fs::exists(raw_dir)) {
        std::map<int, std::string> frames;
        for (const auto& entry : fs::directory_iterator(raw_dir)) {
            if (entry.path().extension() == ".raw16") {
                // frame index = trailing digit run of the stem ("000004", "frame_4", ...)
                const std::string stem = entry.path().stem().string();
                std::size_t pos = stem.size();
                while (pos > 0 && std::isdigit(static_cast<unsigned char>(stem[pos - 1]))) --pos;
                if (pos < stem.size()) {
                    frames[std::stoi(stem.substr(pos))] = entry.path().string();
                }
            }
        }
        if (!frames.empty()) {
            const int last = frames.rbegin()->first;
            for (int i = frames.begin()->first; i <= last; ++i) {
                auto it = frames.find(i);
                if (it == frames.end()) {
                    seq.missing_raw_indices.push_back(i);
                } else {
                    seq.raw_frames.push_back(it->second);
                }
            }
        }
    }
    return seq;
}

AdjacentIouStats stats_adjacent_iou(const ParsedTable& gt) {
    AdjacentIouStats out;
    std::map<int, std::map<int, track::BBox>> by_id;  // id -> frame -> box
    for (const auto& r : gt.records) by_id[r.id][r.frame] = r.box();
    double sum = 0;
    for (const auto& [id, frames] : by_id) {
        for (auto it = frames.begin(); it != frames.end(); ++it) {
            auto next = frames.find(it->first + 1);
            if (next == frames.end()) continue;
            const double v = track::iou(it->second, next->second);
            sum += v;
            out.count += 1;
            const int bin = std::min(19, static_cast<int>(v * 20.0));
            out.histogram[bin] += 1;
        }
    }
    if (out.count > 0) {
        out.mean = sum / out.count;
        out.empty = false;
    }
    return out;
}

CosineStats stats_appearance_cosine(const ParsedTable& gt, const std::vector<BlobEntry>& embeddings) {
    std::unordered_map<std::string, const BlobEntry*> by_name;
    for (const auto& e : embeddings) by_name[e.name] = &e;
    auto lookup = [&](int frame, int id) -> const std::vector<double>* {
        auto it = by_name.find("f" + std::to_string(frame) + "_id" + std::to_string(id));
        return it == by_name.end() ? nullptr : &it->second->data;
    };

    CosineStats out;
    auto add = [](double v, double& mean_sum, long& count, std::array<long, 40>& hist) {
        mean_sum += v;
        count += 1;
        hist[std::min(39, static_cast<int>(v / 2.0 * 40.0))] += 1;
    };
    double same_sum = 0, cross_sum = 0;

    // same-id: consecutive appearances of each id
    std::map<int, std::vector<std::pair<int, int>>> frames_of_id;  // id -> sorted (frame, id)
    std::map<int, std::vector<int>> ids_of_frame;
    for (const auto& r : gt.records) {
        frames_of_id[r.id].emplace_back(r.frame, r.id);
        ids_of_frame[r.frame].push_back(r.id);
    }
    for (const auto& [id, apps] : frames_of_id) {
        for (std::size_t i = 0; i + 1 < apps.size(); ++i) {
            const auto* u = lookup(apps[i].first, id);
            const auto* v = lookup(apps[i + 1].first, id);
            if (!u || !v) {
                out.missing_embeddings += 1;
                continue;
            }
            add(track::cosine_distance(*u, *v), same_sum, out.same_id_count, out.same_id_histogram);
        }
    }
    // cross-id: co-occurring distinct ids per frame
    for (const auto& [frame, ids] : ids_of_frame) {
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = i + 1; j < ids.size(); ++j) {
                if (ids[i] == ids[j]) continue;
                const auto* u = lookup(frame, ids[i]);
                const auto* v = lookup(frame, ids[j]);
                if (!u || !v) {
                    out.missing_embeddings += 1;
                    continue;
                }
                add(track::cosine_distance(*u, *v), cross_sum, out.cross_id_count, out.cross_id_histogram);
            }
    }
    if (out.same_id_count > 0) out.same_id_mean = same_sum / out.same_id_count;
    if (out.cross_id_count > 0) out.cross_id_mean = cross_sum / out.cross_id_count;
    return out;
}

}  // namespace lmot::io
