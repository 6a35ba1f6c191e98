#include "cbbl/boxes.hpp"

#include "cbbl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cbbl {

namespace {

struct Corners {
    double x1, y1, x2, y2;
};

Corners to_corners(const BoxXYWH& b) {
    return {b.x - 0.5 * b.w, b.y - 0.5 * b.h, b.x + 0.5 * b.w, b.y + 0.5 * b.h};
}

} // namespace

double OffsetVector::operator[](int i) const {
    switch (i) {
    case 0: return tx;
    case 1: return ty;
    case 2: return tw;
    case 3: return th;
    }
    throw RangeError("offset index " + std::to_string(i) + " outside [0, 3]");
}

double& OffsetVector::operator[](int i) {
    switch (i) {
    case 0: return tx;
    case 1: return ty;
    case 2: return tw;
    case 3: return th;
    }
    throw RangeError("offset index " + std::to_string(i) + " outside [0, 3]");
}

void validate_box(const BoxXYWH& box, const char* what) {
    const std::string name(what);
    if (!std::isfinite(box.x)) throw DomainError(name + ".x is not finite");
    if (!std::isfinite(box.y)) throw DomainError(name + ".y is not finite");
    if (!std::isfinite(box.w) || box.w <= 0.0)
        throw DomainError(name + ".w must be positive and finite, got " + std::to_string(box.w));
    if (!std::isfinite(box.h) || box.h <= 0.0)
        throw DomainError(name + ".h must be positive and finite, got " + std::to_string(box.h));
}

OffsetVector encode_offsets(const BoxXYWH& box, const Anchor& anchor) {
    validate_box(box, "box");
    validate_box(anchor, "anchor");
    return {(box.x - anchor.x) / anchor.w, (box.y - anchor.y) / anchor.h,
            std::log(box.w / anchor.w), std::log(box.h / anchor.h)};
}

BoxXYWH decode_offsets(const OffsetVector& offsets, const Anchor& anchor) {
    validate_box(anchor, "anchor");
    return {anchor.x + offsets.tx * anchor.w, anchor.y + offsets.ty * anchor.h,
            anchor.w * std::exp(offsets.tw), anchor.h * std::exp(offsets.th)};
}

OverlapAreas overlap_areas(const BoxXYWH& a, const BoxXYWH& b) {
    const Corners ca = to_corners(a);
    const Corners cb = to_corners(b);
    const double iw = std::max(0.0, std::min(ca.x2, cb.x2) - std::max(ca.x1, cb.x1));
    const double ih = std::max(0.0, std::min(ca.y2, cb.y2) - std::max(ca.y1, cb.y1));
    const double inter = iw * ih;
    return {inter, a.w * a.h + b.w * b.h - inter};
}

double iou(const BoxXYWH& a, const BoxXYWH& b) {
    validate_box(a, "a");
    validate_box(b, "b");
    if (a == b) return 1.0;
    const OverlapAreas o = overlap_areas(a, b);
    return std::clamp(o.intersection / o.union_area, 0.0, 1.0);
}

} // namespace cbbl
