// SPDX-License-Identifier: Apache-2.0
#include "deco/trace.hpp"

#include <cstring>
#include <string>

#include "binary_io.hpp"
#include "deco/error.hpp"

namespace deco {

std::uint64_t TraceHeader::step_bytes() const {
  std::uint64_t floats = std::uint64_t{num_layers} * vocab_size;
  if (has_hidden()) floats += std::uint64_t{num_layers} * hidden_dim;
  return floats * sizeof(float);
}

namespace {

void write_header(std::ostream& os, const TraceHeader& h) {
  os.write(TraceHeader::kMagic, 4);
  detail::write_u32(os, h.version);
  detail::write_u32(os, h.num_layers);
  detail::write_u32(os, h.vocab_size);
  detail::write_u32(os, h.hidden_dim);
  detail::write_u32(os, h.num_steps);
  detail::write_u32(os, h.flags);
}

}  // namespace

// ---------------------------------------------------------------------------

TraceWriter::TraceWriter(const std::filesystem::path& path, std::uint32_t num_layers,
                         std::uint32_t vocab_size, std::uint32_t hidden_dim)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open trace for writing: " + path.string());
  if (num_layers == 0 || vocab_size == 0) throw InvalidInput("trace: empty shape");
  header_.num_layers = num_layers;
  header_.vocab_size = vocab_size;
  header_.hidden_dim = hidden_dim;
  header_.flags = hidden_dim > 0 ? TraceHeader::kFlagHidden : 0;
  write_header(out_, header_);
}

TraceWriter::~TraceWriter() {
  try {
    finish();
  } catch (...) {
  }
}

void TraceWriter::append(const LayerwiseStep& step) {
  if (finished_) throw InvalidInput("trace: append after finish");
  if (step.num_layers != header_.num_layers || step.vocab_size != header_.vocab_size ||
      step.first_layer != 1) {
    throw InvalidInput("trace: step shape does not match header (full readout required)");
  }
  if (header_.has_hidden() && step.hidden_dim != header_.hidden_dim) {
    throw InvalidInput("trace: step lacks hidden states required by header");
  }
  detail::write_f32(out_, step.early_logits);
  if (header_.has_hidden()) detail::write_f32(out_, step.hidden);
  if (!out_) throw IoError("trace write failed: " + path_.string());
  ++header_.num_steps;
}

void TraceWriter::finish() {
  if (finished_) return;
  finished_ = true;
  out_.seekp(20);
  detail::write_u32(out_, header_.num_steps);
  out_.close();
  if (!out_) throw IoError("trace finalize failed: " + path_.string());
}

// ---------------------------------------------------------------------------

TraceReader::TraceReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open trace: " + path.string());
  const std::uint64_t actual = std::filesystem::file_size(path);
  if (actual < TraceHeader::kBytes) {
    throw FormatError("truncated trace header: expected " + std::to_string(TraceHeader::kBytes) +
                      " bytes, got " + std::to_string(actual));
  }
  unsigned char raw[TraceHeader::kBytes];
  in_.read(reinterpret_cast<char*>(raw), sizeof raw);
  if (std::memcmp(raw, TraceHeader::kMagic, 4) != 0) throw FormatError("not an LWT1 trace: bad magic");
  header_.version = detail::read_u32(raw + 4);
  header_.num_layers = detail::read_u32(raw + 8);
  header_.vocab_size = detail::read_u32(raw + 12);
  header_.hidden_dim = detail::read_u32(raw + 16);
  header_.num_steps = detail::read_u32(raw + 20);
  header_.flags = detail::read_u32(raw + 24);
  if (header_.version != TraceHeader::kVersion) {
    throw FormatError("unsupported trace version " + std::to_string(header_.version));
  }
  if ((header_.flags & ~TraceHeader::kFlagHidden) != 0) throw FormatError("trace: unknown flag bits");
  if (header_.num_layers == 0 || header_.vocab_size == 0) throw FormatError("trace: empty shape in header");
  if (header_.has_hidden() != (header_.hidden_dim > 0)) {
    throw FormatError("trace: hidden flag disagrees with hidden_dim");
  }
  if (actual != header_.file_bytes()) {
    throw FormatError(std::string(actual < header_.file_bytes() ? "truncated" : "oversized") +
                      " trace: expected " + std::to_string(header_.file_bytes()) + " bytes, got " +
                      std::to_string(actual));
  }
}

LayerwiseStep TraceReader::read_step(std::uint32_t index) {
  if (index >= header_.num_steps) {
    throw InvalidInput("trace step index " + std::to_string(index) + " out of range (" +
                       std::to_string(header_.num_steps) + " steps)");
  }
  LayerwiseStep step;
  step.num_layers = header_.num_layers;
  step.vocab_size = header_.vocab_size;
  step.early_logits.resize(std::size_t{header_.num_layers} * header_.vocab_size);
  if (header_.has_hidden()) {
    step.hidden_dim = header_.hidden_dim;
    step.hidden.resize(std::size_t{header_.num_layers} * header_.hidden_dim);
  }
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(TraceHeader::kBytes + header_.step_bytes() * index));
  detail::read_f32(in_, step.early_logits);
  if (header_.has_hidden()) detail::read_f32(in_, step.hidden);
  if (!in_) throw IoError("trace read failed: " + path_.string());
  return step;
}

void write_trace(const std::filesystem::path& path, const std::vector<LayerwiseStep>& steps) {
  if (steps.empty()) throw InvalidInput("write_trace: no steps");
  TraceWriter writer(path, steps.front().num_layers, steps.front().vocab_size, steps.front().hidden_dim);
  for (const auto& s : steps) writer.append(s);
  writer.finish();
}

std::vector<LayerwiseStep> read_trace(const std::filesystem::path& path) {
  TraceReader reader(path);
  std::vector<LayerwiseStep> steps;
  steps.reserve(reader.num_steps());
  for (std::uint32_t i = 0; i < reader.num_steps(); ++i) steps.push_back(reader.read_step(i));
  return steps;
}

// ---------------------------------------------------------------------------

struct TraceReplayModel::Source {
  std::vector<LayerwiseStep> memory;
  std::unique_ptr<TraceReader> reader;
  std::mutex mu;

  LayerwiseStep get(std::uint32_t index) {
    if (reader) {
      std::lock_guard lock(mu);
      return reader->read_step(index);
    }
    if (index >= memory.size()) {
      throw InvalidInput("trace step index " + std::to_string(index) + " out of range (" +
                         std::to_string(memory.size()) + " steps)");
    }
    return memory[index];
  }
};

namespace {

class ReplaySession final : public Session {
 public:
  explicit ReplaySession(const TraceReplayModel& model) : model_(model) {}

  void append(TokenId) override { ++cursor_; }

  LayerwiseStep readout(const ReadoutSpec& spec) const override {
    LayerwiseStep step = model_.step(cursor_);
    if (!spec.hidden) {
      step.hidden_dim = 0;
      step.hidden.clear();
    }
    return step;
  }

  std::unique_ptr<Session> clone() const override { return std::make_unique<ReplaySession>(*this); }

 private:
  const TraceReplayModel& model_;
  std::uint32_t cursor_ = 0;
};

}  // namespace

TraceReplayModel::TraceReplayModel(std::shared_ptr<Source> source, TraceHeader header)
    : source_(std::move(source)), header_(header) {}

TraceReplayModel TraceReplayModel::open(const std::filesystem::path& path) {
  auto source = std::make_shared<Source>();
  source->reader = std::make_unique<TraceReader>(path);
  const TraceHeader header = source->reader->header();
  return TraceReplayModel(std::move(source), header);
}

TraceReplayModel TraceReplayModel::from_steps(std::vector<LayerwiseStep> steps) {
  if (steps.empty()) throw InvalidInput("trace replay: no steps");
  TraceHeader header;
  header.num_layers = steps.front().num_layers;
  header.vocab_size = steps.front().vocab_size;
  header.hidden_dim = steps.front().hidden_dim;
  header.flags = header.hidden_dim > 0 ? TraceHeader::kFlagHidden : 0;
  header.num_steps = static_cast<std::uint32_t>(steps.size());
  for (const auto& s : steps) {
    s.validate();
    if (s.num_layers != header.num_layers || s.vocab_size != header.vocab_size || s.first_layer != 1) {
      throw InvalidInput("trace replay: inconsistent step shapes");
    }
  }
  auto source = std::make_shared<Source>();
  source->memory = std::move(steps);
  return TraceReplayModel(std::move(source), header);
}

std::unique_ptr<Session> TraceReplayModel::start(const TokenSequence&) const {
  return std::make_unique<ReplaySession>(*this);
}

LayerwiseStep TraceReplayModel::step(std::uint32_t index) const { return source_->get(index); }

}  // namespace deco
