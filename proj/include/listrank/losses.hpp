#pragma once

#include <span>
#include <vector>

// The two listwise objectives with analytic gradients w.r.t. the scores, and
// the ground-truth top-one target builder.
namespace listrank::losses {

// softmax(-aucs, tau = 1): lower AUC (more sensitive) gets higher probability.
std::vector<double> top_one_target(std::span<const double> aucs);

struct ListLoss {
  double value = 0.0;
  std::vector<double> score_grad;
};

// Cross-entropy between the target top-one distribution and softmax(scores, 1).
// grad[i] = p[i] - target[i].
ListLoss list_one(std::span<const double> scores, std::span<const double> target);

// Cross-entropy between raw binary labels and softmax(scores, tau).
// Labels are used unnormalized, so grad[i] = (L * s[i] - labels[i]) / tau with
// L = sum(labels). All-zero labels are rejected.
ListLoss list_all(std::span<const double> scores, std::span<const double> labels,
                  double tau = 0.5);

}  // namespace listrank::losses
