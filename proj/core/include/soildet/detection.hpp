#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace soildet {

/// Axis-aligned box in continuous pixel coordinates (area = width * height,
/// no +1 convention).
struct BoundingBox {
    double xmin = 0, ymin = 0, xmax = 0, ymax = 0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }
    bool valid() const { return xmax > xmin && ymax > ymin; }
};

struct IouComponents {
    double iou = 0.0;
    double intersect = 0.0;
    double union_area = 0.0;
};

/// Overlap metrics for two boxes. Throws std::invalid_argument on a
/// degenerate box (zero or negative extent).
IouComponents iou_components(const BoundingBox& a, const BoundingBox& b);

/// The ratio leg of iou_components, exposed so area-level fixtures can be
/// checked directly: iou * union == intersect.
double iou_from_areas(double intersect, double union_area);

struct LabeledBox {
    std::string label;
    BoundingBox box;
};

struct Annotation {
    std::string image_id;
    std::vector<LabeledBox> boxes;
};

struct VocError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parse a PASCAL VOC annotation document. Unknown elements are ignored;
/// missing bndbox fields or xmax <= xmin throw VocError.
Annotation parse_voc(std::string_view xml_text);

/// Re-serialize an annotation as VOC XML; box coordinates round-trip exactly.
std::string serialize_voc(const Annotation& annotation);

struct MatchPair {
    std::size_t pred_index = 0;
    std::size_t gt_index = 0;
    double iou = 0.0;
};

struct MatchReport {
    std::vector<MatchPair> pairs;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    double threshold = 0.5;

    double precision() const {
        auto d = true_positives + false_positives;
        return d == 0 ? 0.0 : static_cast<double>(true_positives) / static_cast<double>(d);
    }
    double recall() const {
        auto d = true_positives + false_negatives;
        return d == 0 ? 0.0 : static_cast<double>(true_positives) / static_cast<double>(d);
    }
};

inline constexpr double kDefaultIouThreshold = 0.5;

/// Greedy one-to-one matching in descending IoU order; pairs below the
/// threshold never match. Unmatched preds are FP, unmatched gts FN.
MatchReport match_detections(std::span<const BoundingBox> preds,
                             std::span<const BoundingBox> gts,
                             double threshold = kDefaultIouThreshold);

/// One evaluation-report line per prediction: best-overlap components plus
/// whether the matcher kept the pair.
struct EvalLine {
    std::string image_id;
    std::size_t detection_index = 0;  // 1-based within the image
    IouComponents components;
    bool matched = false;
};

/// "<image_id> Detection<k> (iou, intersect, union): (…, …, …) matched=0|1"
void write_eval_line(std::ostream& out, const EvalLine& line);

}  // namespace soildet
