#pragma once

#include <cstdint>

#include "qreason/diffcore/gradcheck.hpp"

namespace qreason::train {

struct GradientAuditConfig {
  int n = 12;       // knowledge positions
  int m = 12;       // statement positions
  int hidden = 16;
  int layers = 2;
  int heads = 4;
  std::uint64_t seed = 5;
  double step = 1e-5;
};

struct GradientAudit {
  diff::GradcheckResult full;    // encoder and every head
  diff::GradcheckResult heads;   // linear scoring layers alone, on fixed random representations
  std::size_t parameters = 0;
};

// Double-precision finite-difference check of reason_loss with every head
// labelled: once through the encoder on a random instance, once for the heads
// alone.
GradientAudit audit_model_gradients(const GradientAuditConfig& config = {});

}  // namespace qreason::train
