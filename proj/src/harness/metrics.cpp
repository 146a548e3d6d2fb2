#include "avsc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "avsc/errors.hpp"

namespace avsc::harness {

std::size_t argmax(std::span<const double> probs) {
  if (probs.empty()) throw ShapeError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

Metrics compute_metrics(const std::vector<std::vector<double>>& probs,
                        std::span<const std::size_t> labels, std::size_t num_classes,
                        Averaging averaging) {
  if (probs.size() != labels.size())
    throw ShapeError("metrics: " + std::to_string(probs.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  if (labels.empty()) throw ShapeError("metrics: no samples");
  std::vector<std::size_t> hits(num_classes, 0), counts(num_classes, 0);
  std::size_t correct = 0;
  double nll = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (probs[i].size() != num_classes || labels[i] >= num_classes)
      throw ShapeError("metrics: prediction width or label out of range at sample " + std::to_string(i));
    const bool ok = argmax(probs[i]) == labels[i];
    correct += ok;
    hits[labels[i]] += ok;
    ++counts[labels[i]];
    nll -= std::log(std::max(probs[i][labels[i]], 1e-12));
  }
  Metrics m;
  m.logloss = nll / static_cast<double>(labels.size());
  if (averaging == Averaging::kMicro) {
    m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  } else {
    double recall = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < num_classes; ++c)
      if (counts[c] > 0) {
        recall += static_cast<double>(hits[c]) / static_cast<double>(counts[c]);
        ++present;
      }
    m.accuracy = recall / static_cast<double>(present);
  }
  return m;
}

}  // namespace avsc::harness
