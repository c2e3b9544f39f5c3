#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cgak/divergence.hpp"

namespace cgak {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(Point2 a, Point2 b);

enum class ChannelKind { histogram, embedding };

std::string_view to_string(ChannelKind kind);
ChannelKind parse_channel_kind(std::string_view text);

using FeatureVector = std::vector<double>;

// One detected face: landmarks in pixel coordinates plus named feature channels.
struct FaceRecord {
  Point2 left_eye;
  Point2 right_eye;
  Point2 nose_tip;
  std::map<std::string, FeatureVector> channels;

  friend bool operator==(const FaceRecord&, const FaceRecord&) = default;
};

// One group-level image: an unordered set of faces and a real intensity label.
struct GroupRecord {
  std::string id;
  double label = 0.0;
  std::vector<FaceRecord> faces;

  friend bool operator==(const GroupRecord&, const GroupRecord&) = default;
};

struct ChannelSpec {
  std::string name;
  std::size_t dim = 0;
  ChannelKind kind = ChannelKind::embedding;
  DivergenceKind divergence = DivergenceKind::sq_euclidean;
  double sigma = 10.0;

  LocalKernelParams local_params() const { return {sigma, divergence}; }

  friend bool operator==(const ChannelSpec&, const ChannelSpec&) = default;
};

// Default local-kernel pairing for a channel kind: chi-square with sigma 100 for
// histograms, squared Euclidean with sigma 10 for embeddings.
ChannelSpec default_channel_spec(std::string name, std::size_t dim, ChannelKind kind);

class ChannelSchema {
 public:
  ChannelSchema() = default;
  // Validates names unique, dim >= 1, sigma > 0 and chi-square only on histograms.
  explicit ChannelSchema(std::vector<ChannelSpec> channels);

  const std::vector<ChannelSpec>& channels() const { return channels_; }
  const ChannelSpec* find(std::string_view name) const;
  const ChannelSpec& at(std::string_view name) const;
  bool empty() const { return channels_.empty(); }

  friend bool operator==(const ChannelSchema&, const ChannelSchema&) = default;

 private:
  std::vector<ChannelSpec> channels_;
};

// A group's feature vectors for one channel, in descending global-weight order.
struct SortedSequence {
  std::string group_id;
  std::string channel;
  std::vector<FeatureVector> features;
  std::vector<double> weights;
  // order[p] is the original index of the face placed at position p.
  std::vector<std::size_t> order;

  std::size_t size() const { return features.size(); }
};

// Parses one JSON-lines record. `line_number` is only used for diagnostics.
GroupRecord parse_group_record(std::string_view line, std::size_t line_number = 0,
                               const ChannelSchema* schema = nullptr);

// Parses a line-delimited dataset. Blank lines are skipped. When `schema` is
// given every face is checked against it as well.
std::vector<GroupRecord> parse_group_records(std::istream& in,
                                             const ChannelSchema* schema = nullptr);

std::vector<GroupRecord> load_group_records(const std::string& path,
                                            const ChannelSchema* schema = nullptr);

std::string serialize_group_record(const GroupRecord& record);
void write_group_records(std::ostream& out, const std::vector<GroupRecord>& records);

// Infers the common schema of a dataset. Channel kind is histogram when every
// value of the channel is non-negative, embedding otherwise. Channels are
// reported in name order, so the result does not depend on record order.
ChannelSchema validate_schema(const std::vector<GroupRecord>& records);

// Checks every face of every record against a declared schema.
void validate_schema(const std::vector<GroupRecord>& records, const ChannelSchema& schema);

ChannelSchema parse_schema(std::istream& in);
ChannelSchema load_schema(const std::string& path);
void write_schema(std::ostream& out, const ChannelSchema& schema);

// FNV-1a over ids and labels in order. Identifies the index order of a dataset,
// independent of which channel is used.
std::uint64_t dataset_hash(const std::vector<GroupRecord>& records);

std::string hash_to_hex(std::uint64_t hash);
std::uint64_t hash_from_hex(std::string_view text);

}  // namespace cgak
