#include "listrank/losses.hpp"

#include "listrank/errors.hpp"
#include "listrank/kernels.hpp"
#include "listrank/nn.hpp"

namespace listrank::losses {

std::vector<double> top_one_target(std::span<const double> aucs) {
  std::vector<double> negated(aucs.size());
  for (std::size_t i = 0; i < aucs.size(); ++i) negated[i] = -aucs[i];
  return nn::softmax(negated, 1.0);
}

ListLoss list_one(std::span<const double> scores, std::span<const double> target) {
  if (scores.size() != target.size()) {
    throw ShapeError("list_one: scores/target length mismatch");
  }
  ListLoss out;
  std::vector<double> p = nn::softmax(scores, 1.0);
  out.value = nn::cross_entropy(target, p);
  out.score_grad.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out.score_grad[i] = p[i] - target[i];
  return out;
}

ListLoss list_all(std::span<const double> scores, std::span<const double> labels,
                  double tau) {
  if (scores.size() != labels.size()) {
    throw ShapeError("list_all: scores/labels length mismatch");
  }
  for (double l : labels) {
    if (l != 0.0 && l != 1.0) throw DomainError("list_all: labels must be binary");
  }
  const double positives = kernels::sum(labels.data(), labels.size());
  if (positives == 0.0) {
    throw DomainError("list_all: at least one sensitive label required");
  }
  ListLoss out;
  std::vector<double> s = nn::softmax(scores, tau);
  out.value = nn::cross_entropy(labels, s);
  out.score_grad.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.score_grad[i] = (positives * s[i] - labels[i]) / tau;
  }
  return out;
}

}  // namespace listrank::losses
