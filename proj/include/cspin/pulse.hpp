#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace cspin {

// One resonant drive segment. Durations follow the plain-frequency
// convention: a resonant pulse of Rabi frequency f rotates the driven pair
// by 2*pi*f*duration radians, so a pi pulse lasts 1/(2f) and a 2pi pulse
// 1/f.
struct Pulse {
  enum Kind { ESR, NMR } kind = ESR;
  double carrier_mhz = 0.0;
  double rabi_mhz = 0.0;
  double phase_rad = 0.0;
  double duration_us = 0.0;
  int target = 0;  // electron index for ESR, nucleus index for NMR
  std::string intent;

  void validate() const {
    if (!(duration_us > 0.0)) throw std::invalid_argument("pulse duration must be > 0");
    if (!(rabi_mhz > 0.0)) throw std::invalid_argument("pulse rabi must be > 0");
    if (!(carrier_mhz > 0.0)) throw std::invalid_argument("pulse carrier must be > 0");
  }
};

inline double two_pi_pulse_duration(double rabi_mhz) { return 1.0 / rabi_mhz; }
inline double pi_pulse_duration(double rabi_mhz) { return 0.5 / rabi_mhz; }
inline double half_pi_pulse_duration(double rabi_mhz) { return 0.25 / rabi_mhz; }

struct PulseSequence {
  std::vector<Pulse> pulses;

  double total_duration_us() const {
    double t = 0.0;
    for (const auto& p : pulses) t += p.duration_us;
    return t;
  }
  int count(Pulse::Kind k) const {
    int n = 0;
    for (const auto& p : pulses) n += p.kind == k;
    return n;
  }
};

inline nlohmann::json to_json(const Pulse& p) {
  return {{"kind", p.kind == Pulse::ESR ? "esr" : "nmr"},
          {"carrier_mhz", p.carrier_mhz},
          {"rabi_mhz", p.rabi_mhz},
          {"phase_rad", p.phase_rad},
          {"duration_us", p.duration_us},
          {"target", p.target},
          {"intent", p.intent}};
}

inline nlohmann::json to_json(const PulseSequence& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : s.pulses) arr.push_back(to_json(p));
  return {{"pulses", arr}};
}

inline Pulse pulse_from_json(const nlohmann::json& j) {
  Pulse p;
  p.kind = j.at("kind").get<std::string>() == "esr" ? Pulse::ESR : Pulse::NMR;
  p.carrier_mhz = j.at("carrier_mhz").get<double>();
  p.rabi_mhz = j.at("rabi_mhz").get<double>();
  p.phase_rad = j.at("phase_rad").get<double>();
  p.duration_us = j.at("duration_us").get<double>();
  p.target = j.at("target").get<int>();
  p.intent = j.value("intent", "");
  return p;
}

inline PulseSequence pulse_sequence_from_json(const nlohmann::json& j) {
  PulseSequence s;
  for (const auto& pj : j.at("pulses")) s.pulses.push_back(pulse_from_json(pj));
  return s;
}

}  // namespace cspin
