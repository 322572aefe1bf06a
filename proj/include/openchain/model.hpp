#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "openchain/chain.hpp"
#include "openchain/protocols.hpp"

namespace openchain {

/// The triple (states, Q, {J^t}); escape probabilities are derived from Q.
class OpenChainModel {
 public:
  OpenChainModel(JumpMatrix jump, ProtocolSchedule schedule)
      : jump_(std::move(jump)), escape_(escape_profile(jump_)), schedule_(std::move(schedule)) {
    require(schedule_.dimension() == jump_.size(), ErrorCode::kShapeMismatch,
            "protocol dimension differs from the number of states");
  }

  OpenChainModel(JumpMatrix jump, IncomingProtocol protocol)
      : OpenChainModel(std::move(jump), ProtocolSchedule(std::move(protocol))) {}

  Eigen::Index size() const { return jump_.size(); }
  const JumpMatrix& jump() const { return jump_; }
  const EscapeProfile& escape() const { return escape_; }
  const ProtocolSchedule& schedule() const { return schedule_; }
  bool is_stationary() const { return schedule_.is_stationary(); }
  const IncomingProtocol& protocol() const { return schedule_.stationary(); }

 private:
  JumpMatrix jump_;
  EscapeProfile escape_;
  ProtocolSchedule schedule_;
};

/// 64-bit FNV-1a; stable across platforms, used for content fingerprints.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  auto [end, ec] = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, end);
  return std::string(16 - s.size(), '0') + s;
}

namespace detail {

inline void put(std::string& out, double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::hex);
  out.append(buf, end);
  out.push_back(',');
}

inline void put(std::string& out, Count x) {
  out += std::to_string(x);
  out.push_back(',');
}

inline void put_table(std::string& out, const JointTable& t) {
  out += "T[";
  for (std::size_t k = 0; k < t.support().size(); ++k) {
    for (Count v : t.support()[k]) put(out, v);
    put(out, t.probabilities()(static_cast<Eigen::Index>(k)));
  }
  out += "]";
}

inline void put_protocol(std::string& out, const IncomingProtocol& p) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ConstantInflow>) {
          out += "C[";
          for (Count v : x.value) put(out, v);
          out += "]";
        } else if constexpr (std::is_same_v<T, IidProductInflow>) {
          out += "I[";
          for (const auto& m : x.marginals) {
            for (std::size_t k = 0; k < m.values().size(); ++k) {
              put(out, m.values()[k]);
              put(out, m.probabilities()(static_cast<Eigen::Index>(k)));
            }
            out += ";";
          }
          out += "]";
        } else if constexpr (std::is_same_v<T, JointTable>) {
          put_table(out, x);
        } else {
          out += "M[";
          for (Eigen::Index i = 0; i < x.transition().size(); ++i) put(out, x.transition().data()[i]);
          for (const auto& r : x.regimes()) put_table(out, r);
          out += "]";
        }
      },
      p.variant());
}

}  // namespace detail

/// Canonical text of the model (hex-float entries) hashed with FNV-1a.
inline std::string model_fingerprint(const OpenChainModel& model) {
  std::string text = "Q" + std::to_string(model.size()) + "[";
  const Matrix& q = model.jump().matrix();
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index j = 0; j < q.cols(); ++j) detail::put(text, q(i, j));
  text += "]S[";
  for (const auto& seg : model.schedule().segments()) {
    text += std::to_string(seg.duration) + ":";
    detail::put_protocol(text, seg.protocol);
  }
  text += "]";
  return hex64(fnv1a64(text));
}

}  // namespace openchain
