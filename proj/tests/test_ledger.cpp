#include <gtest/gtest.h>

#include <json.hpp>

#include "mneme/error.hpp"
#include "mneme/ledger.hpp"
#include "mneme/poe.hpp"
#include "mneme/random.hpp"

using namespace mneme;
using namespace mneme::ledger;

namespace {

Hash256 fake_input(std::uint64_t i) {
  Bytes b(8);
  for (int k = 0; k < 8; ++k) b[k] = static_cast<std::uint8_t>(i >> (8 * k));
  return crypto::sha256(b);
}

struct People {
  crypto::KeyPair alice = crypto::generate_keypair(101);
  crypto::KeyPair bob = crypto::generate_keypair(102);
  crypto::KeyPair carol = crypto::generate_keypair(103);
  crypto::KeyPair david = crypto::generate_keypair(104);
  Genesis genesis = make_genesis(9, {alice.public_key, bob.public_key, carol.public_key, david.public_key}, 100);
};

Transaction transfer(const PublicKey& from, const PublicKey& to, Credits amount, Hash256 input,
                     std::uint64_t nonce = 0) {
  Transaction tx;
  tx.sender = from;
  tx.receiver = to;
  tx.amount = amount;
  tx.inputs = {input};
  tx.nonce = nonce;
  return tx;
}

Block settled(std::vector<Transaction> txs, std::vector<Hash256> parents, Slot at,
              const PublicKey& creator) {
  Block b;
  b.transactions = std::move(txs);
  std::sort(parents.begin(), parents.end());
  b.parents = std::move(parents);
  b.created_at = at;
  b.creator = creator;
  b.verification = BlockVerification{};
  b.verification->verified_at = at;
  return b;
}

// The eight transfers of the worked netting example, in two blocks of four.
std::pair<Block, Block> example_blocks(const People& p, const Hash256& parent) {
  const auto &A = p.alice.public_key, &B = p.bob.public_key, &C = p.carol.public_key,
             &D = p.david.public_key;
  Block b1 = settled({transfer(A, B, 5, fake_input(1)), transfer(A, C, 2, fake_input(2)),
                      transfer(A, D, 2, fake_input(3)), transfer(B, D, 1, fake_input(4))},
                     {parent}, 1, A);
  Block b2 = settled({transfer(D, C, 2, fake_input(5)), transfer(B, A, 1, fake_input(6)),
                      transfer(C, A, 1, fake_input(7)), transfer(C, D, 1, fake_input(8))},
                     {parent}, 2, B);
  return {b1, b2};
}

RegenesisBlock signed_regenesis(std::vector<const crypto::KeyPair*> signers,
                                std::vector<PublicKey> committee, std::vector<Hash256> summarized,
                                std::vector<Block> summaries) {
  RegenesisBlock rb;
  rb.epoch = 1;
  std::sort(summarized.begin(), summarized.end());
  rb.summarized_headers = std::move(summarized);
  rb.summary_blocks = std::move(summaries);
  std::sort(committee.begin(), committee.end());
  rb.committee = std::move(committee);
  auto d = rb.digest();
  for (const auto* k : signers)
    rb.committee_signatures.push_back({k->public_key, crypto::sign(k->secret_key, d.view())});
  return rb;
}

}  // namespace

TEST(Tips, GenesisOnly) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  EXPECT_EQ(tips(v), std::vector<Hash256>{p.genesis.hash()});
}

TEST(Tips, ChainAndDiamond) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto g = p.genesis.hash();
  auto b = settled({transfer(p.alice.public_key, p.bob.public_key, 1, fake_input(1))}, {g}, 1, p.alice.public_key);
  auto c = settled({transfer(p.bob.public_key, p.carol.public_key, 1, fake_input(2))}, {b.hash()}, 2, p.bob.public_key);
  ASSERT_EQ(v.add_block(b), LedgerView::AddResult::added);
  ASSERT_EQ(v.add_block(c), LedgerView::AddResult::added);
  EXPECT_EQ(tips(v), std::vector<Hash256>{c.hash()});

  LedgerView d(p.alice.public_key, p.genesis);
  auto x = settled({transfer(p.alice.public_key, p.bob.public_key, 1, fake_input(3))}, {g}, 1, p.alice.public_key);
  auto y = settled({transfer(p.carol.public_key, p.bob.public_key, 1, fake_input(4))}, {g}, 1, p.carol.public_key);
  d.add_block(x);
  d.add_block(y);
  auto t = tips(d);
  std::vector<Hash256> want{x.hash(), y.hash()};
  std::sort(want.begin(), want.end());
  EXPECT_EQ(t, want);
}

TEST(LedgerView, OrphansAttachWhenParentArrives) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto b = settled({transfer(p.alice.public_key, p.bob.public_key, 1, fake_input(1))}, {p.genesis.hash()}, 1, p.alice.public_key);
  auto c = settled({transfer(p.bob.public_key, p.carol.public_key, 1, fake_input(2))}, {b.hash()}, 2, p.bob.public_key);
  EXPECT_EQ(v.add_block(c), LedgerView::AddResult::orphaned);
  EXPECT_EQ(v.orphan_count(), 1u);
  EXPECT_EQ(v.add_block(b), LedgerView::AddResult::added);
  EXPECT_EQ(v.orphan_count(), 0u);
  EXPECT_TRUE(v.contains(c.hash()));
  EXPECT_EQ(v.add_block(c), LedgerView::AddResult::duplicate);
  EXPECT_TRUE(v.is_acyclic());
}

TEST(LedgerView, UnsettledOrInternallyConflictingRejected) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto b = settled({transfer(p.alice.public_key, p.bob.public_key, 1, fake_input(1))}, {p.genesis.hash()}, 1, p.alice.public_key);
  b.verification.reset();
  EXPECT_EQ(v.add_block(b), LedgerView::AddResult::rejected);
  auto c = settled({transfer(p.alice.public_key, p.bob.public_key, 1, fake_input(1)),
                    transfer(p.alice.public_key, p.carol.public_key, 1, fake_input(1))},
                   {p.genesis.hash()}, 1, p.alice.public_key);
  EXPECT_EQ(v.add_block(c), LedgerView::AddResult::rejected);
}

TEST(SpendKeys, SameInputDifferentSendersDoNotConflict) {
  People p;
  auto g = p.genesis.hash();
  auto a = transfer(p.alice.public_key, p.carol.public_key, 1, g);
  auto b = transfer(p.bob.public_key, p.carol.public_key, 1, g);
  EXPECT_TRUE(conflict_free({a, b}));
  auto a2 = transfer(p.alice.public_key, p.david.public_key, 1, g, 1);
  EXPECT_FALSE(conflict_free({a, a2}));
  EXPECT_NE(spend_key(g, p.alice.public_key), spend_key(g, p.bob.public_key));
}

TEST(Ownership, FundedSpendAccepted) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto tx = transfer(p.alice.public_key, p.bob.public_key, 5, p.genesis.hash());
  tx.tx_fee = 1;
  EXPECT_TRUE(validate_ownership(tx, v));
  tx.amount = 100;
  EXPECT_FALSE(validate_ownership(tx, v));  // 101 > 100
}

TEST(Ownership, UnknownInputThrows) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  EXPECT_THROW(validate_ownership(transfer(p.alice.public_key, p.bob.public_key, 1, fake_input(77)), v),
               UnknownInput);
}

TEST(Ownership, AlreadySpentInputRejected) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto first = transfer(p.alice.public_key, p.bob.public_key, 5, p.genesis.hash(), 1);
  auto second = transfer(p.alice.public_key, p.carol.public_key, 5, p.genesis.hash(), 2);
  v.record_acceptance(first);
  EXPECT_FALSE(validate_ownership(second, v));
}

TEST(Conflict, DetectsDoubleSpendOnly) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto first = transfer(p.alice.public_key, p.bob.public_key, 5, p.genesis.hash(), 1);
  auto second = transfer(p.alice.public_key, p.carol.public_key, 5, p.genesis.hash(), 2);
  EXPECT_FALSE(detect_conflict(first, v));
  v.record_acceptance(first);
  EXPECT_FALSE(detect_conflict(first, v));
  EXPECT_TRUE(detect_conflict(second, v));
  EXPECT_THROW(v.record_acceptance(second), DomainError);
  EXPECT_EQ(v.accepted_tx_index().size(), 1u);
}

TEST(Balance, UnknownKeyIsZero) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  EXPECT_EQ(balance(v, crypto::generate_keypair(999).public_key), 0);
  EXPECT_EQ(balance(v, p.alice.public_key), 100);
}

TEST(Balance, WorkedExampleDeltas) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto [b1, b2] = example_blocks(p, p.genesis.hash());
  ASSERT_EQ(v.add_block(b1), LedgerView::AddResult::added);
  ASSERT_EQ(v.add_block(b2), LedgerView::AddResult::added);
  EXPECT_EQ(balance(v, p.alice.public_key), 100 - 7);
  EXPECT_EQ(balance(v, p.bob.public_key), 100 + 3);
  EXPECT_EQ(balance(v, p.carol.public_key), 100 + 2);
  EXPECT_EQ(balance(v, p.david.public_key), 100 + 2);
}

TEST(Prune, WorkedExampleReplacesTwoBlocksWithOne) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto [b1, b2] = example_blocks(p, p.genesis.hash());
  v.add_block(b1);
  v.add_block(b2);
  std::vector<PublicKey> committee{p.alice.public_key, p.bob.public_key, p.david.public_key};
  auto summary = poe::summarize_epoch({b1, b2}, committee, 3, 4, 1);
  ASSERT_EQ(summary.size(), 1u);
  ASSERT_EQ(summary[0].transactions.size(), 4u);
  auto rb = signed_regenesis({&p.alice, &p.bob, &p.david}, committee, {b1.hash(), b2.hash()}, summary);
  EXPECT_EQ(prune(v, rb, 3), 2u);
  EXPECT_FALSE(v.contains(b1.hash()));
  EXPECT_TRUE(v.is_summarized(b1.hash()));
  EXPECT_TRUE(v.contains(summary[0].hash()));
  EXPECT_EQ(balance(v, p.alice.public_key), 100 - 7 + 1);
  EXPECT_EQ(balance(v, p.bob.public_key), 100 + 3 + 1);
  EXPECT_EQ(balance(v, p.carol.public_key), 100 + 2);
  EXPECT_EQ(balance(v, p.david.public_key), 100 + 2 + 1);
  EXPECT_EQ(v.regenesis_chain().size(), 1u);
}

TEST(Prune, EmptySummaryDeletesNothing) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto rb = signed_regenesis({&p.alice}, {p.alice.public_key}, {}, {});
  EXPECT_EQ(prune(v, rb, 1), 0u);
}

TEST(Prune, BelowQuorumThrows) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  std::vector<PublicKey> committee{p.alice.public_key, p.bob.public_key, p.carol.public_key};
  auto rb = signed_regenesis({&p.alice, &p.bob}, committee, {}, {});
  EXPECT_THROW(prune(v, rb, 3), UnverifiedRegenesis);
  // Signatures by non-members and repeats do not count.
  rb.committee_signatures.push_back(rb.committee_signatures.front());
  rb.committee_signatures.push_back({p.david.public_key, crypto::sign(p.david.secret_key, rb.digest().view())});
  EXPECT_EQ(valid_committee_signatures(rb), 2u);
}

TEST(Forwarders, ChainVerifiesAndDetectsReorder) {
  People p;
  auto tx = transfer(p.alice.public_key, p.bob.public_key, 1, p.genesis.hash());
  append_forwarder(tx, p.carol.secret_key);
  append_forwarder(tx, p.david.secret_key);
  EXPECT_TRUE(verify_forwarder_chain(tx));
  std::swap(tx.forwarder_signatures[0], tx.forwarder_signatures[1]);
  EXPECT_FALSE(verify_forwarder_chain(tx));
}

TEST(FeeCredits, SharesAndRemainderToCreator) {
  People p;
  auto tx = transfer(p.alice.public_key, p.bob.public_key, 1, fake_input(1));
  tx.tx_fee = 3;
  tx.block_fee = 5;
  append_forwarder(tx, p.carol.secret_key);
  append_forwarder(tx, p.david.secret_key);
  Block b = settled({tx}, {p.genesis.hash()}, 1, p.alice.public_key);
  b.forwarders = {p.carol.public_key};
  SignerEntry s1, s2;
  s1.signer = p.alice.public_key;
  s2.signer = p.bob.public_key;
  b.signers = {s1, s2};
  auto credits = compute_fee_credits(b, 0.5);
  std::map<PublicKey, Credits> got;
  Credits total = 0;
  for (const auto& c : credits) {
    got[c.account] += c.amount;
    total += c.amount;
  }
  EXPECT_EQ(total, 8);  // every fee credit is paid out
  // tx fee 3 over carol, david: 2 and 1.
  // block fee 5: floor(2.5) = 2 to carol, signers 3 -> 1 each, remainder 1 to the creator.
  EXPECT_EQ(got[p.carol.public_key], 2 + 2);
  EXPECT_EQ(got[p.david.public_key], 1);
  EXPECT_EQ(got[p.bob.public_key], 1);
  EXPECT_EQ(got[p.alice.public_key], 1 + 1);
}

TEST(Encoding, RoundTrips) {
  People p;
  auto [b1, b2] = example_blocks(p, p.genesis.hash());
  append_forwarder(b1.transactions[0], p.carol.secret_key);
  EXPECT_EQ(decode_block(encode(b1)), b1);
  EXPECT_EQ(decode_transaction(encode(b2.transactions[1])), b2.transactions[1]);
  auto rb = signed_regenesis({&p.alice}, {p.alice.public_key}, {b1.hash()}, {});
  rb.reputation_table = {{p.alice.public_key, 0.5}};
  EXPECT_EQ(decode_regenesis(encode(rb)), rb);
  auto bytes = encode(b1);
  bytes.pop_back();
  EXPECT_THROW(decode_block(bytes), DecodeError);
}

TEST(Snapshot, ListsBlocksAndBalances) {
  People p;
  LedgerView v(p.alice.public_key, p.genesis);
  auto doc = nlohmann::json::parse(export_snapshot(v));
  EXPECT_EQ(doc["blocks"].size(), 1u);
  EXPECT_EQ(doc["balances"][p.alice.public_key.hex()], 100);
}

TEST(Acyclicity, RandomDagsStayAcyclic) {
  People p;
  Rng rng(5);
  LedgerView v(p.alice.public_key, p.genesis);
  std::vector<Hash256> hashes{p.genesis.hash()};
  for (std::uint64_t i = 0; i < 200; ++i) {
    std::vector<Hash256> parents{hashes[rng.below(hashes.size())]};
    auto extra = hashes[rng.below(hashes.size())];
    if (extra != parents[0]) parents.push_back(extra);
    auto b = settled({transfer(p.alice.public_key, p.bob.public_key, 1, fake_input(1000 + i))}, parents,
                     static_cast<Slot>(i + 1), p.alice.public_key);
    ASSERT_EQ(v.add_block(b), LedgerView::AddResult::added);
    hashes.push_back(b.hash());
  }
  EXPECT_TRUE(v.is_acyclic());
  EXPECT_EQ(balance(v, p.alice.public_key), 100 - 200);
}
