#include "mneme/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <mutex>

#include "mneme/codec.hpp"
#include "mneme/error.hpp"

namespace mneme {

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xf]);
  }
  return s;
}

PublicKey virtual_user() { return PublicKey{}; }

PublicKey burn_account() {
  PublicKey pk;
  pk.bytes.fill(0xff);
  return pk;
}

bool is_reserved_account(const PublicKey& pk) {
  return pk == virtual_user() || pk == burn_account();
}

namespace crypto {
namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error("libsodium initialization failed");
  });
}

Hash256 domain_hash(std::string_view domain, std::uint64_t value) {
  ByteWriter w;
  w.text(domain);
  w.u64(value);
  return sha256(w.bytes());
}

}  // namespace

KeyPair generate_keypair(std::uint64_t seed) {
  ensure_sodium();
  auto material = domain_hash("mneme/keypair", seed);
  KeyPair kp;
  crypto_sign_seed_keypair(kp.public_key.bytes.data(), kp.secret_key.bytes.data(),
                           material.bytes.data());
  return kp;
}

PublicKey derive_public_key(const SecretKey& sk) {
  ensure_sodium();
  PublicKey pk;
  crypto_sign_ed25519_sk_to_pk(pk.bytes.data(), sk.bytes.data());
  return pk;
}

Hash256 sha256(ByteView data) {
  ensure_sodium();
  Hash256 h;
  crypto_hash_sha256(h.bytes.data(), data.data(), data.size());
  return h;
}

Signature sign(const SecretKey& sk, ByteView message) {
  ensure_sodium();
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                       sk.bytes.data());
  return sig;
}

bool verify(const PublicKey& pk, ByteView message, const Signature& sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(),
                                     pk.bytes.data()) == 0;
}

PrfKey derive_prf_key(std::uint64_t genesis_seed) {
  auto h = domain_hash("mneme/prf", genesis_seed);
  PrfKey k;
  k.bytes = h.bytes;
  return k;
}

bool LocationMessage::lists(const PublicKey& pk) const {
  return std::binary_search(neighbor_ids.begin(), neighbor_ids.end(), pk);
}

LocationMessage make_location_message(Point location, std::vector<PublicKey> neighbors,
                                      Slot timestamp) {
  std::sort(neighbors.begin(), neighbors.end());
  neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());
  return {location, std::move(neighbors), timestamp};
}

namespace {

void write_message(ByteWriter& w, const LocationMessage& m) {
  w.point(m.location);
  w.u32(static_cast<std::uint32_t>(m.neighbor_ids.size()));
  for (const auto& pk : m.neighbor_ids) w.fixed(pk);
  w.i64(m.timestamp);
}

LocationMessage read_message(ByteReader& r) {
  LocationMessage m;
  m.location = r.point();
  auto n = r.u32();
  m.neighbor_ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) m.neighbor_ids.push_back(r.fixed<PublicKey>());
  m.timestamp = r.i64();
  if (!std::is_sorted(m.neighbor_ids.begin(), m.neighbor_ids.end()) ||
      std::adjacent_find(m.neighbor_ids.begin(), m.neighbor_ids.end()) != m.neighbor_ids.end())
    throw DecodeError("neighbor ids not canonical");
  return m;
}

}  // namespace

Bytes encode(const LocationMessage& m) {
  ByteWriter w;
  write_message(w, m);
  return std::move(w).bytes();
}

LocationMessage decode_location_message(ByteView bytes) {
  ByteReader r(bytes);
  auto m = read_message(r);
  r.expect_done();
  return m;
}

Tag produce_tag(const PrfKey& key, const LocationMessage& m) {
  ensure_sodium();
  auto bytes = encode(m);
  Tag t;
  crypto_auth_hmacsha256(t.digest.bytes.data(), bytes.data(), bytes.size(), key.bytes.data());
  return t;
}

LocationMessage Commitment::message() const {
  ByteReader r(payload);
  auto m = read_message(r);
  r.fixed<Hash256>();
  r.expect_done();
  return m;
}

Tag Commitment::tag() const {
  ByteReader r(payload);
  read_message(r);
  Tag t{r.fixed<Hash256>()};
  r.expect_done();
  return t;
}

Hash256 Commitment::hash() const { return sha256(encode(*this)); }

Bytes encode(const Commitment& c) {
  ByteWriter w;
  w.fixed(c.committer);
  w.blob(c.payload);
  w.fixed(c.signature);
  return std::move(w).bytes();
}

Commitment decode_commitment(ByteView bytes) {
  ByteReader r(bytes);
  Commitment c;
  c.committer = r.fixed<PublicKey>();
  c.payload = r.blob();
  c.signature = r.fixed<Signature>();
  r.expect_done();
  return c;
}

Commitment commit(const SecretKey& sk, const PrfKey& key, const LocationMessage& m,
                  const Tag& tag) {
  if (!(produce_tag(key, m) == tag)) throw TagMismatch("tag was not produced from message");
  auto pk = derive_public_key(sk);
  if (m.lists(pk)) throw MalformedMessage("claimant lists itself as a neighbor");

  ByteWriter w;
  write_message(w, m);
  w.fixed(tag.digest);
  Commitment c;
  c.committer = pk;
  c.payload = std::move(w).bytes();
  c.signature = sign(sk, c.payload);
  return c;
}

bool verify_commitment(const PrfKey& key, const Commitment& c) {
  if (!verify(c.committer, c.payload, c.signature)) return false;
  try {
    auto m = c.message();
    return produce_tag(key, m) == c.tag() && !m.lists(c.committer);
  } catch (const DecodeError&) {
    return false;
  }
}

Bytes Attestation::signed_bytes() const {
  ByteWriter w;
  w.text("mneme/attestation");
  w.fixed(commitment_hash);
  w.boolean(yes);
  w.fixed(verifier);
  w.point(verifier_location);
  w.i64(timestamp);
  return std::move(w).bytes();
}

bool verify_attestation(const Attestation& a) {
  return verify(a.verifier, a.signed_bytes(), a.signature);
}

Attestation verify_neighbor_claim(const SecretKey& verifier_sk, Point verifier_location,
                                  const PrfKey& key, const Commitment& comm, double radius) {
  if (!verify_commitment(key, comm)) throw InvalidCommitment("commitment does not verify");
  auto m = comm.message();

  Attestation a;
  a.commitment_hash = comm.hash();
  a.verifier = derive_public_key(verifier_sk);
  a.verifier_location = verifier_location;
  a.timestamp = m.timestamp;
  a.yes = m.lists(a.verifier) && distance(m.location, verifier_location) < radius;
  a.signature = sign(verifier_sk, a.signed_bytes());
  return a;
}

}  // namespace crypto
}  // namespace mneme
