#pragma once

#include <vector>

#include "mneme/crypto.hpp"

namespace mneme::poc {

/// A location commitment together with the neighbors' signed answers and the
/// reputation-weighted share of neighbors that answered yes.
struct ContextProof {
  crypto::Commitment commitment;
  std::vector<crypto::Attestation> attestations;
  double weight = 0.0;

  Point claimed_location() const { return commitment.message().location; }
  friend bool operator==(const ContextProof&, const ContextProof&) = default;
};

}  // namespace mneme::poc
