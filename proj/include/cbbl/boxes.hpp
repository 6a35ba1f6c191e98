#ifndef CBBL_BOXES_HPP
#define CBBL_BOXES_HPP

namespace cbbl {

// Axis-aligned box in center form, pixel units.
struct BoxXYWH {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;
    double h = 1.0;

    friend bool operator==(const BoxXYWH&, const BoxXYWH&) = default;
};

// Anchors are ordinary boxes.
using Anchor = BoxXYWH;

// Anchor-relative offsets: normalized center deltas and log size ratios.
struct OffsetVector {
    double tx = 0.0;
    double ty = 0.0;
    double tw = 0.0;
    double th = 0.0;

    double operator[](int i) const;
    double& operator[](int i);

    friend bool operator==(const OffsetVector&, const OffsetVector&) = default;
};

// Throws DomainError naming the field when a side is non-positive or any
// field is non-finite. `what` prefixes the message ("box", "anchor", ...).
void validate_box(const BoxXYWH& box, const char* what = "box");

// tx = (x - xa) / wa, ty = (y - ya) / ha, tw = ln(w / wa), th = ln(h / ha)
OffsetVector encode_offsets(const BoxXYWH& box, const Anchor& anchor);

// Inverse of encode_offsets.
BoxXYWH decode_offsets(const OffsetVector& offsets, const Anchor& anchor);

// Intersection over union, in [0, 1]. Zero for disjoint boxes.
double iou(const BoxXYWH& a, const BoxXYWH& b);

// Intersection and union areas, used by the IoU loss.
struct OverlapAreas {
    double intersection = 0.0;
    double union_area = 0.0;
};
OverlapAreas overlap_areas(const BoxXYWH& a, const BoxXYWH& b);

} // namespace cbbl

#endif // CBBL_BOXES_HPP
