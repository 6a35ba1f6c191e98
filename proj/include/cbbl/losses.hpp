#ifndef CBBL_LOSSES_HPP
#define CBBL_LOSSES_HPP

#include "cbbl/boxes.hpp"
#include "cbbl/grid.hpp"

#include <vector>

namespace cbbl {

// Loss value together with its gradient. What the gradient is taken with
// respect to depends on the loss:
//   ce / um / cbbl     -> logits, one entry per grid point
//   l2 / smooth_l1     -> predicted offsets (tx, ty, tw, th)
//   iou                -> horizontal shift of the predicted center (1 entry)
struct LossValueGrad {
    double value = 0.0;
    std::vector<double> grad;
};

struct SmoothL1Params {
    // Transition point between the quadratic and linear branches.
    double delta = 1.0;
};

// Cross entropy against a two-hot label:
//   value = -p*_l ln p_l - p*_r ln p_r,   d value / d l_i = p_i - p*_i.
// Throws RangeError if the label indices do not fit the distribution.
LossValueGrad ce_loss(const TwoHotLabel& label, const ConfidenceDistribution& dist);

// Uncertainty minimization: value = |H(p*) - H(p)|.
// d H(p) / d l_i = -p_i (ln p_i + H(p)); at H(p) == H(p*) the gradient is 0.
LossValueGrad um_loss(const TwoHotLabel& label, const ConfidenceDistribution& dist);

// ce + um_weight * um. Throws ConfigError for negative or non-finite weight.
LossValueGrad cbbl_loss(const TwoHotLabel& label, const ConfidenceDistribution& dist,
                        double um_weight = 1.0);

// Squared L2 distance sum_i (t_i - t_hat_i)^2, gradient 2 (t - t_hat).
LossValueGrad l2_loss(const OffsetVector& t, const OffsetVector& t_hat);

// Per coordinate d = t - t_hat:
//   |d| <= delta: d^2 / (2 delta), grad d / delta
//   otherwise:    |d| - delta / 2, grad sign(d)
LossValueGrad smooth_l1_loss(const OffsetVector& t, const OffsetVector& t_hat,
                             const SmoothL1Params& params = {});

// -ln(IoU(gt, pred)) with gradient w.r.t. pred.x. The gradient is closed
// form when no vertical edge of pred coincides with one of gt; at coincident
// edges (kinks) a central difference with step 1e-6 px is reported.
// Throws DomainError when the boxes do not overlap.
LossValueGrad iou_loss(const BoxXYWH& gt, const BoxXYWH& pred);

} // namespace cbbl

#endif // CBBL_LOSSES_HPP
