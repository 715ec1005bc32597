#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rca/corpus.hpp"

namespace rca::synth {

inline constexpr std::size_t kFamilyCount = 20;

struct SynthConfig {
    std::size_t incidents = 200;
    std::size_t families = kFamilyCount;   // at most kFamilyCount
    std::uint64_t seed = 20240401;
    double stack_trace_rate = 0.3;
    double image_rate = 0.2;
};

struct SynthIncident {
    Incident incident;
    std::size_t family = 0;
    std::size_t injected_frames = 0;
    std::size_t injected_images = 0;
};

/// Incidents are spread round-robin over families in time: each block of
/// `families` consecutive incidents (by created_at) holds one member of
/// every family, so contiguous time splits stay balanced.
std::vector<SynthIncident> generate(const SynthConfig& config);

std::vector<Incident> generate_incidents(const SynthConfig& config);

}  // namespace rca::synth
