#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "mneme/error.hpp"
#include "mneme/poc.hpp"

using namespace mneme;
using namespace mneme::poc;

namespace {

// Six signers-to-be and six witnesses, each witness standing 10 m from its signer.
struct Net {
  std::vector<crypto::KeyPair> keys;
  ledger::Genesis genesis;
  PocParams params;
  std::vector<std::unique_ptr<Corroborator>> nodes;

  explicit Net(PocParams p, std::size_t n = 12) : params(p) {
    std::vector<PublicKey> accounts;
    for (std::size_t i = 0; i < n; ++i) {
      keys.push_back(crypto::generate_keypair(500 + i));
      accounts.push_back(keys.back().public_key);
    }
    genesis = ledger::make_genesis(3, accounts, 100);
    for (const auto& k : keys) nodes.push_back(std::make_unique<Corroborator>(k, genesis, params));
  }

  Corroborator& node(std::size_t i) { return *nodes[i]; }

  void place(std::size_t i, Point at, std::size_t witness) {
    node(i).set_location(at);
    Point w{at.x + 10, at.y};
    node(i).set_context_proof(prove_location(keys[i], at, {{&keys[witness], w}}, genesis.prf_key,
                                             params.radius, 0, genesis.reputations));
  }

  ledger::Transaction tx(std::size_t from, std::size_t to, Credits amount, std::uint64_t nonce = 0,
                         Credits fee = 0) {
    ledger::Transaction t;
    t.sender = keys[from].public_key;
    t.receiver = keys[to].public_key;
    t.amount = amount;
    t.tx_fee = fee;
    t.inputs = {genesis.hash()};
    t.nonce = nonce;
    return t;
  }
};

PocParams triangle_params() {
  PocParams p;
  p.B = 1;
  p.mRS = 3;
  p.mD = 250;
  p.radius = 50;
  return p;
}

}  // namespace

TEST(AveragePairwiseDistance, Examples) {
  EXPECT_DOUBLE_EQ(average_pairwise_distance({{0, 0}, {3, 4}}), 5.0);
  EXPECT_NEAR(average_pairwise_distance({{0, 0}, {0, 300}, {300, 0}}), (600 + 300 * std::sqrt(2.0)) / 3, 1e-9);
  EXPECT_DOUBLE_EQ(average_pairwise_distance({{7, 7}, {7, 7}, {7, 7}}), 0.0);
  EXPECT_THROW(average_pairwise_distance({{0, 0}}), TooFewPoints);
}

TEST(ContextProof, WeightsFollowReputation) {
  std::vector<crypto::KeyPair> k;
  for (int i = 0; i < 5; ++i) k.push_back(crypto::generate_keypair(900 + i));
  auto prf = crypto::derive_prf_key(1);
  ReputationTable reps;
  for (const auto& kp : k) reps[kp.public_key] = 1.0;

  std::vector<Witness> all;
  for (int i = 1; i <= 4; ++i) all.push_back({&k[i], {10.0 * i, 0}});
  auto full = prove_location(k[0], {0, 0}, all, prf, 50, 0, reps);
  EXPECT_DOUBLE_EQ(full.weight, 1.0);

  std::vector<Witness> half{{&k[1], {10, 0}}, {&k[2], {20, 0}}, {&k[3], {400, 0}}, {&k[4], {400, 400}}};
  EXPECT_DOUBLE_EQ(prove_location(k[0], {0, 0}, half, prf, 50, 0, reps).weight, 0.5);

  auto m = crypto::make_location_message({0, 0}, {}, 0);
  auto c = crypto::commit(k[0].secret_key, prf, m, crypto::produce_tag(prf, m));
  EXPECT_THROW(build_context_proof(c, {}, reps), NoNeighbors);
}

TEST(ContextProof, VerificationRules) {
  std::vector<crypto::KeyPair> k;
  for (int i = 0; i < 3; ++i) k.push_back(crypto::generate_keypair(950 + i));
  auto prf = crypto::derive_prf_key(1);
  ReputationTable reps{{k[0].public_key, 1.0}, {k[1].public_key, 1.0}, {k[2].public_key, 1.0}};
  PocParams params;
  params.min_context_weight = 0.3;
  auto proof = prove_location(k[0], {0, 0}, {{&k[1], {5, 0}}, {&k[2], {0, 5}}}, prf, 50, 0, reps);
  EXPECT_TRUE(verify_context_proof(proof, reps, params, prf));

  auto forged = proof;
  forged.attestations[0].signature = crypto::sign(k[0].secret_key, forged.attestations[0].signed_bytes());
  EXPECT_FALSE(verify_context_proof(forged, reps, params, prf));

  auto inflated = proof;
  inflated.weight = 2.0;
  EXPECT_FALSE(verify_context_proof(inflated, reps, params, prf));

  ReputationTable zero{{k[0].public_key, 0.0}, {k[1].public_key, 0.0}, {k[2].public_key, 0.0}};
  auto unweighted = prove_location(k[0], {0, 0}, {{&k[1], {5, 0}}, {&k[2], {0, 5}}}, prf, 50, 0, zero);
  EXPECT_DOUBLE_EQ(unweighted.weight, 0.0);
  EXPECT_FALSE(verify_context_proof(unweighted, zero, params, prf));
}

TEST(Acceptance, DeltaAndTrustedForwarders) {
  PocParams p;
  p.mTr = 3;
  p.delta = 5;
  Net net(p);
  auto& r = net.node(0);
  r.trust().pin({net.keys[1].public_key, net.keys[2].public_key, net.keys[3].public_key});
  auto tx = net.tx(4, 0, 5);
  ledger::append_forwarder(tx, net.keys[1].secret_key);
  ledger::append_forwarder(tx, net.keys[2].secret_key);
  EXPECT_EQ(accept_transaction(r, tx, 10), TxDecision::pending);  // two trusted signers
  ledger::append_forwarder(tx, net.keys[3].secret_key);
  EXPECT_EQ(accept_transaction(r, tx, 14), TxDecision::pending);  // 4 slots since first sighting
  EXPECT_EQ(accept_transaction(r, tx, 15), TxDecision::accepted);
  EXPECT_TRUE(r.view().is_accepted(tx.id()));
}

TEST(Acceptance, ConflictDuringWaitRejects) {
  PocParams p;
  p.mTr = 1;
  p.delta = 5;
  Net net(p);
  auto& r = net.node(0);
  r.trust().pin({net.keys[1].public_key});
  auto tx = net.tx(4, 0, 5, 1);
  ledger::append_forwarder(tx, net.keys[1].secret_key);
  EXPECT_EQ(accept_transaction(r, tx, 0), TxDecision::pending);
  auto rival = net.tx(4, 5, 5, 2);
  r.observe_transaction(rival, 2);
  EXPECT_EQ(accept_transaction(r, tx, 5), TxDecision::rejected);
}

TEST(Acceptance, TrustTrackerOrdersByCount) {
  TrustTracker t;
  auto a = crypto::generate_keypair(1).public_key, b = crypto::generate_keypair(2).public_key,
       c = crypto::generate_keypair(3).public_key;
  t.record(a, 1);
  t.record(b, 5);
  t.record(c, 3);
  EXPECT_EQ(t.trusted(2), (std::vector<PublicKey>{b, c}));
}

TEST(ProposeBlock, ExactlyBTransactions) {
  auto params = triangle_params();
  params.B = 2;
  Net net(params);
  net.place(0, {0, 0}, 6);
  auto& n = net.node(0);
  ASSERT_TRUE(n.acknowledge(net.tx(1, 2, 5), 0));
  EXPECT_THROW(propose_block(n, 1), InsufficientTransactions);
  ASSERT_TRUE(n.acknowledge(net.tx(2, 3, 5), 0));
  auto b = propose_block(n, 1);
  EXPECT_EQ(b.transactions.size(), 2u);
  EXPECT_EQ(b.avg_signer_distance, 0.0);
  EXPECT_EQ(b.signers.size(), 1u);
  EXPECT_EQ(b.parents, std::vector<Hash256>{net.genesis.hash()});
}

TEST(ProposeBlock, ExcludesLaterConflictingSpend) {
  auto params = triangle_params();
  params.B = 2;
  Net net(params);
  net.place(0, {0, 0}, 6);
  auto& n = net.node(0);
  auto first = net.tx(1, 2, 5, 1);
  auto later = net.tx(1, 3, 5, 2, 9);  // higher fee, seen later
  auto other = net.tx(4, 2, 5, 3);
  n.view().add_pending(first, 0);
  n.view().add_pending(later, 3);
  n.view().add_pending(other, 1);
  auto b = propose_block(n, 5);
  ASSERT_EQ(b.transactions.size(), 2u);
  for (const auto& tx : b.transactions) EXPECT_NE(tx.id(), later.id());
}

TEST(BlockReceived, TriangleVerifiesOnThirdSigner) {
  auto params = triangle_params();
  Net net(params);
  net.place(0, {0, 0}, 6);
  net.place(1, {0, 300}, 7);
  net.place(2, {300, 0}, 8);
  auto tx = net.tx(9, 10, 5);
  for (int i = 0; i < 3; ++i) ASSERT_TRUE(net.node(i).acknowledge(tx, 0));

  auto b0 = propose_block(net.node(0), 1);
  auto r1 = on_block_received(net.node(1), b0, 2);
  ASSERT_EQ(r1.action, BlockAction::sign_and_forward);
  EXPECT_EQ(r1.block.signers.size(), 2u);
  EXPECT_DOUBLE_EQ(r1.block.avg_signer_distance, 300.0);
  auto r2 = on_block_received(net.node(2), r1.block, 3);
  ASSERT_EQ(r2.action, BlockAction::verify_and_add);
  EXPECT_NEAR(r2.block.avg_signer_distance, (600 + 300 * std::sqrt(2.0)) / 3, 1e-9);
  EXPECT_TRUE(net.node(2).view().contains(r2.block.hash()));
  EXPECT_EQ(net.node(2).view().pending_pool().size(), 0u);

  // The rest of the network adds the verified block.
  EXPECT_EQ(on_verified_block(net.node(3), r2.block), VerifiedOutcome::added);
  EXPECT_EQ(on_verified_block(net.node(3), r2.block), VerifiedOutcome::ignored);
}

TEST(BlockReceived, CloseSignersDoNotVerify) {
  auto params = triangle_params();
  Net net(params);
  net.place(0, {0, 0}, 6);
  net.place(1, {0, 100}, 7);
  net.place(2, {100, 0}, 8);
  auto tx = net.tx(9, 10, 5);
  for (int i = 0; i < 3; ++i) net.node(i).acknowledge(tx, 0);
  auto b = propose_block(net.node(0), 1);
  auto r1 = on_block_received(net.node(1), b, 2);
  auto r2 = on_block_received(net.node(2), r1.block, 3);
  EXPECT_EQ(r2.action, BlockAction::sign_and_forward);  // avg 114 m < 250 m
  EXPECT_FALSE(r2.block.verification.has_value());
}

TEST(BlockReceived, UnknownTransactionsForwardAfterBackoff) {
  auto params = triangle_params();
  params.backoff = 4;
  Net net(params);
  net.place(0, {0, 0}, 6);
  net.place(1, {0, 300}, 7);
  auto tx = net.tx(9, 10, 5);
  net.node(0).acknowledge(tx, 0);
  auto b = propose_block(net.node(0), 1);
  auto r = on_block_received(net.node(1), b, 2);
  EXPECT_EQ(r.action, BlockAction::forward_only);
  EXPECT_EQ(r.forward_at, 6);
  EXPECT_EQ(r.block.forwarders, std::vector<PublicKey>{net.keys[1].public_key});
}

TEST(BlockReceived, ConflictWithAcceptedIgnored) {
  auto params = triangle_params();
  Net net(params);
  net.place(0, {0, 0}, 6);
  net.place(1, {0, 300}, 7);
  auto tx = net.tx(9, 10, 5, 1);
  net.node(0).acknowledge(tx, 0);
  auto b = propose_block(net.node(0), 1);
  net.node(1).view().record_acceptance(net.tx(9, 11, 5, 2));
  auto r = on_block_received(net.node(1), b, 2);
  EXPECT_EQ(r.action, BlockAction::ignore);
  EXPECT_TRUE(net.node(1).blacklisted(b.hash()));
}

TEST(BlockReceived, TamperedSignerRejected) {
  auto params = triangle_params();
  Net net(params);
  net.place(0, {0, 0}, 6);
  net.place(1, {0, 300}, 7);
  auto tx = net.tx(9, 10, 5);
  net.node(0).acknowledge(tx, 0);
  net.node(1).acknowledge(tx, 0);
  auto b = propose_block(net.node(0), 1);
  b.avg_signer_distance = 999;  // claimed distance does not match the signer locations
  EXPECT_EQ(on_block_received(net.node(1), b, 2).action, BlockAction::ignore);
}

TEST(VerifiedBlock, ConflictRulePrefersMoreSigners) {
  auto params = triangle_params();
  params.mRS = 2;
  params.mD = 100;
  Net net(params);
  net.place(0, {0, 0}, 6);
  net.place(1, {0, 300}, 7);
  net.place(2, {300, 0}, 8);
  net.place(3, {300, 300}, 11);
  auto a = net.tx(9, 10, 5, 1);
  auto c = net.tx(9, 5, 5, 2);  // same spend, other receiver

  net.node(0).acknowledge(a, 0);
  net.node(1).acknowledge(a, 0);
  auto small = on_block_received(net.node(1), propose_block(net.node(0), 1), 2);
  ASSERT_EQ(small.action, BlockAction::verify_and_add);

  PocParams p3 = params;
  p3.mRS = 3;
  Net other(p3);
  // Rebuild a three-signer rival in a network with the same identities.
  other.place(2, {300, 0}, 8);
  other.place(3, {300, 300}, 11);
  other.place(1, {0, 300}, 7);
  for (int i : {1, 2, 3}) other.node(i).acknowledge(c, 0);
  auto r1 = on_block_received(other.node(3), propose_block(other.node(2), 1), 2);
  auto big = on_block_received(other.node(1), r1.block, 3);
  ASSERT_EQ(big.action, BlockAction::verify_and_add);

  auto& observer = net.node(4);
  EXPECT_EQ(on_verified_block(observer, small.block), VerifiedOutcome::added);
  EXPECT_TRUE(preferred(big.block, small.block));
  EXPECT_EQ(on_verified_block(observer, big.block), VerifiedOutcome::replaced);
  EXPECT_FALSE(observer.view().contains(small.block.hash()));
  EXPECT_TRUE(observer.view().is_accepted(c.id()));
  EXPECT_FALSE(observer.view().is_accepted(a.id()));
}

TEST(Wire, MessagesRoundTrip) {
  auto k = crypto::generate_keypair(77);
  auto ack = make_tx_ack(k, crypto::sha256(Bytes{1}), crypto::sha256(Bytes{2}));
  EXPECT_TRUE(verify_tx_ack(ack));
  auto m = make_message(ack, 5, k.public_key);
  auto back = decode_message(encode(m));
  EXPECT_EQ(back, m);
  EXPECT_EQ(decode_tx_ack(back.body), ack);
  ack.conflicting.reset();
  EXPECT_FALSE(verify_tx_ack(ack));
  auto bytes = encode(m);
  bytes[0] = 9;
  EXPECT_THROW(decode_message(bytes), DecodeError);
}
