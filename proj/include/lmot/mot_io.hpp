#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lmot/blob.hpp"
#include "lmot/tracker.hpp"

namespace lmot::io {

/// Pinned class ids: 1=person, 2=bicycle, 3=car, 4=motorcycle, 5=bus, 6=truck.
extern const std::array<const char*, 7> kClassNames;

struct AnnotationRecord {
    int frame = 0;
    int id = -1;
    double x = 0, y = 0, w = 0, h = 0;
    double conf = 1.0;
    int class_id = -1;
    double visibility = 1.0;

    track::BBox box() const { return {x, y, w, h}; }
};

struct ParsedTable {
    std::vector<AnnotationRecord> records;  // sorted by (frame, id)
    int rejected = 0;                       // non-positive w/h lines dropped
};

/// MOTChallenge gt line: frame,id,x,y,w,h,conf,class,visibility
ParsedTable parse_gt(const std::string& path);

/// det line: frame,-1,x,y,w,h,score,-1,-1,-1
std::vector<track::Detection> parse_det(const std::string& path);

/// result line: frame,id,x,y,w,h,conf,-1,-1,-1 at 2-decimal fixed precision
void write_result(const std::vector<track::ResultRow>& rows, const std::string& path);
std::vector<track::ResultRow> parse_result(const std::string& path);

struct SequenceMeta {
    std::string name;
    double fps = 20.0;
    int width = 0;
    int height = 0;
    int length = 1;
    std::string split = "train";
};

struct Sequence {
    SequenceMeta meta;
    std::optional<ParsedTable> gt;
    std::optional<std::vector<track::Detection>> det;
    std::vector<std::string> raw_frames;      // ordered .raw16 paths
    std::vector<int> missing_raw_indices;     // numbering gaps in raw/
};

/// Directory must hold a `seqinfo` key=value file; gt/gt.txt, det/det.txt and
/// raw/ are discovered when present.
Sequence load_sequence(const std::string& dir);

struct AdjacentIouStats {
    double mean = 0.0;
    long count = 0;
    std::array<long, 20> histogram{};  // bins over [0,1]
    bool empty = true;
};

/// IoU between consecutive-frame boxes of the same id.
AdjacentIouStats stats_adjacent_iou(const ParsedTable& gt);

struct CosineStats {
    double same_id_mean = 0.0;
    long same_id_count = 0;
    std::array<long, 40> same_id_histogram{};  // bins over [0,2]
    double cross_id_mean = 0.0;
    long cross_id_count = 0;
    std::array<long, 40> cross_id_histogram{};
    int missing_embeddings = 0;
};

/// Embeddings blob entries are named f{frame}_id{id}; referenced records with
/// no embedding are skipped and counted.
CosineStats stats_appearance_cosine(const ParsedTable& gt, const std::vector<BlobEntry>& embeddings);

}  // namespace lmot::io
