#pragma once

// Identities, signatures and the location-commitment primitives that
// Proof-of-Context is assembled from.

#include <cstdint>
#include <vector>

#include "mneme/types.hpp"

namespace mneme::crypto {

struct KeyPair {
  PublicKey public_key;
  SecretKey secret_key;
};

/// Deterministic identity for reproducible simulation runs.
KeyPair generate_keypair(std::uint64_t seed);
PublicKey derive_public_key(const SecretKey& sk);

Hash256 sha256(ByteView data);
Signature sign(const SecretKey& sk, ByteView message);
bool verify(const PublicKey& pk, ByteView message, const Signature& sig);

/// PRF key derived from the genesis randomness; identical at every node.
PrfKey derive_prf_key(std::uint64_t genesis_seed);

/// What a node claims about itself at one slot.
struct LocationMessage {
  Point location;
  std::vector<PublicKey> neighbor_ids;  // kept sorted and unique
  Slot timestamp = 0;

  bool lists(const PublicKey& pk) const;
  friend bool operator==(const LocationMessage&, const LocationMessage&) = default;
};

/// Normalizes neighbor ids (sorted, deduplicated) so equal claims encode equally.
LocationMessage make_location_message(Point location, std::vector<PublicKey> neighbors,
                                      Slot timestamp);

Bytes encode(const LocationMessage& m);
LocationMessage decode_location_message(ByteView bytes);

struct Tag {
  Hash256 digest;
  friend bool operator==(const Tag&, const Tag&) = default;
};

/// HMAC-SHA-256 of the canonical message encoding under the genesis key.
Tag produce_tag(const PrfKey& key, const LocationMessage& m);

struct Commitment {
  PublicKey committer;
  Bytes payload;  // encode(message) ++ tag
  Signature signature;

  LocationMessage message() const;
  Tag tag() const;
  Hash256 hash() const;
  friend bool operator==(const Commitment&, const Commitment&) = default;
};

Bytes encode(const Commitment& c);
Commitment decode_commitment(ByteView bytes);

/// Signs (m, tag). Throws TagMismatch when tag was not produced from m and
/// MalformedMessage when m lists the committer as its own neighbor.
Commitment commit(const SecretKey& sk, const PrfKey& key, const LocationMessage& m,
                  const Tag& tag);

/// Signature check plus tag consistency.
bool verify_commitment(const PrfKey& key, const Commitment& c);

/// A neighbor's signed answer to one specific commitment.
struct Attestation {
  Hash256 commitment_hash;
  bool yes = false;
  PublicKey verifier;
  Point verifier_location;
  Slot timestamp = 0;
  Signature signature;

  Bytes signed_bytes() const;
  friend bool operator==(const Attestation&, const Attestation&) = default;
};

bool verify_attestation(const Attestation& a);

/// Answers yes iff the verifier is listed by the claimant and the claimed
/// location is strictly closer than radius. Throws InvalidCommitment when the
/// commitment does not verify.
Attestation verify_neighbor_claim(const SecretKey& verifier_sk, Point verifier_location,
                                  const PrfKey& key, const Commitment& comm, double radius);

}  // namespace mneme::crypto
