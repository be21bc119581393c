#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "agrpose/eval/metrics.hpp"
#include "agrpose/pipeline/config.hpp"

namespace agrpose::pipeline {

inline const std::vector<std::string> kProtocols{"projection", "cross_view", "random_view", "cross_pose"};

/// One trained configuration inside a protocol.
struct ProtocolCell {
  std::string name;  // also the subdirectory under <out>/cells
  RunConfig config;
};

/// Training cells for `protocol` derived from the base config.
std::vector<ProtocolCell> protocol_cells(const std::string& protocol, const RunConfig& base);

/// Synthetic config of the fixed camera `view` (index into view_theta_deg).
synth::SynthConfig view_synth(const RunConfig& base, std::size_t view);

struct ProtocolOptions {
  std::function<void(const std::string&)> log;
};

/// Trains (or reloads, when <out>/cells/<name> holds a checkpoint of the same
/// config) every cell, evaluates it on the protocol's test sets and writes
/// <out>/<protocol>.csv. Returns the rows written.
std::vector<eval::CsvRow> run_protocol(const std::string& protocol, const RunConfig& base,
                                       const std::filesystem::path& out, const ProtocolOptions& opt = {});

}  // namespace agrpose::pipeline
