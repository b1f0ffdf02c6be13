// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <vector>

#include "deco/layerwise.hpp"

namespace deco {

// LWT1 layerwise trace, little-endian throughout.
//
//   offset  size  field
//   0       4     magic "LWTR"
//   4       4     version (u32, = 1)
//   8       4     num_layers
//   12      4     vocab_size
//   16      4     hidden_dim (0 when hidden states are absent)
//   20      4     num_steps
//   24      4     flags (bit 0: hidden states present)
//   28      ...   steps: num_layers x vocab_size float32 logits, then
//                 num_layers x hidden_dim float32 hidden states if bit 0

struct TraceHeader {
  static constexpr char kMagic[4] = {'L', 'W', 'T', 'R'};
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::uint32_t kFlagHidden = 1;
  static constexpr std::size_t kBytes = 28;

  std::uint32_t version = kVersion;
  std::uint32_t num_layers = 0;
  std::uint32_t vocab_size = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t num_steps = 0;
  std::uint32_t flags = 0;

  bool has_hidden() const { return (flags & kFlagHidden) != 0; }
  std::uint64_t step_bytes() const;
  std::uint64_t file_bytes() const { return kBytes + step_bytes() * num_steps; }

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

/// Streams steps to an LWT1 file. The step count is patched on finish().
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, std::uint32_t num_layers, std::uint32_t vocab_size,
              std::uint32_t hidden_dim);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  /// Requires a full readout (first_layer == 1) of matching shape.
  void append(const LayerwiseStep& step);
  void finish();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  TraceHeader header_;
  bool finished_ = false;
};

/// Random-access reader. One consumer per handle.
class TraceReader {
 public:
  explicit TraceReader(const std::filesystem::path& path);

  const TraceHeader& header() const { return header_; }
  std::uint32_t num_steps() const { return header_.num_steps; }
  LayerwiseStep read_step(std::uint32_t index);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  TraceHeader header_;
};

void write_trace(const std::filesystem::path& path, const std::vector<LayerwiseStep>& steps);
std::vector<LayerwiseStep> read_trace(const std::filesystem::path& path);

/// Replays recorded steps as a layerwise model. A session ignores the prompt
/// and returns step k after k appended tokens.
class TraceReplayModel final : public LayerwiseModel {
 public:
  static TraceReplayModel open(const std::filesystem::path& path);
  static TraceReplayModel from_steps(std::vector<LayerwiseStep> steps);

  std::uint32_t num_layers() const override { return header_.num_layers; }
  std::uint32_t vocab_size() const override { return header_.vocab_size; }
  std::uint32_t hidden_dim() const override { return header_.hidden_dim; }
  std::uint32_t num_steps() const { return header_.num_steps; }
  std::unique_ptr<Session> start(const TokenSequence& prompt) const override;

  LayerwiseStep step(std::uint32_t index) const;

 private:
  struct Source;
  TraceReplayModel(std::shared_ptr<Source> source, TraceHeader header);

  std::shared_ptr<Source> source_;
  TraceHeader header_;
};

}  // namespace deco
