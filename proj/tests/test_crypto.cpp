#include <gtest/gtest.h>

#include <set>

#include "mneme/crypto.hpp"
#include "mneme/error.hpp"

using namespace mneme;
using namespace mneme::crypto;

namespace {

struct Fixture {
  KeyPair alice = generate_keypair(1);
  KeyPair bob = generate_keypair(2);
  KeyPair carol = generate_keypair(3);
  PrfKey prf = derive_prf_key(42);

  LocationMessage claim(Point at) const {
    return make_location_message(at, {bob.public_key, carol.public_key}, 10);
  }
  Commitment committed(Point at) const {
    auto m = claim(at);
    return commit(alice.secret_key, prf, m, produce_tag(prf, m));
  }
};

}  // namespace

TEST(Keys, DeterministicPerSeed) {
  auto a = generate_keypair(7);
  auto b = generate_keypair(7);
  EXPECT_EQ(a.public_key, b.public_key);
  EXPECT_EQ(a.secret_key, b.secret_key);
  EXPECT_NE(generate_keypair(7).public_key, generate_keypair(8).public_key);
  EXPECT_EQ(derive_public_key(a.secret_key), a.public_key);
}

TEST(Keys, NoCollisionsOverHundredThousandSeeds) {
  std::set<PublicKey> seen;
  for (std::uint64_t s = 1; s <= 100000; ++s) seen.insert(generate_keypair(s).public_key);
  EXPECT_EQ(seen.size(), 100000u);
}

TEST(Signatures, VerifyAndReject) {
  auto k = generate_keypair(5);
  Bytes msg{1, 2, 3};
  auto sig = sign(k.secret_key, msg);
  EXPECT_TRUE(verify(k.public_key, msg, sig));
  msg[0] ^= 1;
  EXPECT_FALSE(verify(k.public_key, msg, sig));
  EXPECT_FALSE(verify(generate_keypair(6).public_key, Bytes{1, 2, 3}, sig));
}

TEST(Sha256, KnownVector) {
  std::string abc = "abc";
  auto h = sha256({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()});
  EXPECT_EQ(h.hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Tag, DeterministicAndSensitive) {
  Fixture f;
  auto m = f.claim({100, 100});
  EXPECT_EQ(produce_tag(f.prf, m), produce_tag(f.prf, m));
  auto shifted = f.claim({101, 100});
  auto t1 = produce_tag(f.prf, m), t2 = produce_tag(f.prf, shifted);
  EXPECT_NE(t1, t2);
  int differing = 0;
  for (std::size_t i = 0; i < 32; ++i)
    differing += __builtin_popcount(t1.digest.bytes[i] ^ t2.digest.bytes[i]);
  EXPECT_GT(differing, 64);  // roughly half of 256 bits
  EXPECT_EQ(t1.digest.size(), 32u);
}

TEST(LocationMessage, NeighborsNormalized) {
  Fixture f;
  auto m = make_location_message({1, 2}, {f.carol.public_key, f.bob.public_key, f.bob.public_key}, 3);
  ASSERT_EQ(m.neighbor_ids.size(), 2u);
  EXPECT_LT(m.neighbor_ids[0], m.neighbor_ids[1]);
  EXPECT_EQ(decode_location_message(encode(m)), m);
}

TEST(Commit, RoundTripAndVerify) {
  Fixture f;
  auto c = f.committed({100, 100});
  EXPECT_TRUE(verify_commitment(f.prf, c));
  EXPECT_EQ(c.message(), f.claim({100, 100}));
  EXPECT_EQ(decode_commitment(encode(c)), c);
}

TEST(Commit, TagFromOtherMessageRejected) {
  Fixture f;
  auto m = f.claim({100, 100});
  auto other = produce_tag(f.prf, f.claim({0, 0}));
  EXPECT_THROW(commit(f.alice.secret_key, f.prf, m, other), TagMismatch);
}

TEST(Commit, SelfListedRejected) {
  Fixture f;
  auto m = make_location_message({1, 1}, {f.alice.public_key}, 0);
  EXPECT_THROW(commit(f.alice.secret_key, f.prf, m, produce_tag(f.prf, m)), MalformedMessage);
}

TEST(Commit, EveryPayloadBitFlipDetected) {
  Fixture f;
  auto c = f.committed({100, 100});
  for (std::size_t i = 0; i < c.payload.size(); ++i) {
    auto bad = c;
    bad.payload[i] ^= 0x01;
    EXPECT_FALSE(verify_commitment(f.prf, bad)) << "byte " << i;
  }
}

TEST(Commit, WrongPrfKeyFails) {
  Fixture f;
  EXPECT_FALSE(verify_commitment(derive_prf_key(43), f.committed({5, 5})));
}

TEST(NeighborClaim, InRangeListedYes) {
  Fixture f;
  auto c = f.committed({100, 100});
  auto a = verify_neighbor_claim(f.bob.secret_key, {120, 100}, f.prf, c, 50);
  EXPECT_TRUE(a.yes);
  EXPECT_TRUE(verify_attestation(a));
  EXPECT_EQ(a.commitment_hash, c.hash());
  EXPECT_EQ(a.verifier, f.bob.public_key);
}

TEST(NeighborClaim, OutOfRangeNo) {
  Fixture f;
  auto c = f.committed({100, 100});
  EXPECT_FALSE(verify_neighbor_claim(f.bob.secret_key, {300, 100}, f.prf, c, 50).yes);
  // Exactly at the radius is not strictly closer.
  EXPECT_FALSE(verify_neighbor_claim(f.bob.secret_key, {150, 100}, f.prf, c, 50).yes);
}

TEST(NeighborClaim, UnlistedVerifierNo) {
  Fixture f;
  auto c = f.committed({100, 100});
  auto dave = generate_keypair(4);
  EXPECT_FALSE(verify_neighbor_claim(dave.secret_key, {101, 100}, f.prf, c, 50).yes);
}

TEST(NeighborClaim, InvalidCommitmentThrows) {
  Fixture f;
  auto c = f.committed({100, 100});
  c.payload[0] ^= 1;
  EXPECT_THROW(verify_neighbor_claim(f.bob.secret_key, {101, 100}, f.prf, c, 50), InvalidCommitment);
}

TEST(Attestation, TamperDetected) {
  Fixture f;
  auto a = verify_neighbor_claim(f.bob.secret_key, {120, 100}, f.prf, f.committed({100, 100}), 50);
  auto flipped = a;
  flipped.yes = false;
  EXPECT_FALSE(verify_attestation(flipped));
  auto moved = a;
  moved.verifier_location.x += 1;
  EXPECT_FALSE(verify_attestation(moved));
}
