#include "cgak/records.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cgak/error.hpp"

namespace cgak {

using nlohmann::json;

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::histogram: return "histogram";
    case ChannelKind::embedding: return "embedding";
  }
  return "unknown";
}

ChannelKind parse_channel_kind(std::string_view text) {
  if (text == "histogram") return ChannelKind::histogram;
  if (text == "embedding") return ChannelKind::embedding;
  throw ValidationError("unknown channel kind '" + std::string(text) + "'");
}

ChannelSpec default_channel_spec(std::string name, std::size_t dim, ChannelKind kind) {
  ChannelSpec spec;
  spec.name = std::move(name);
  spec.dim = dim;
  spec.kind = kind;
  if (kind == ChannelKind::histogram) {
    spec.divergence = DivergenceKind::chi_square;
    spec.sigma = 100.0;
  } else {
    spec.divergence = DivergenceKind::sq_euclidean;
    spec.sigma = 10.0;
  }
  return spec;
}

ChannelSchema::ChannelSchema(std::vector<ChannelSpec> channels) : channels_(std::move(channels)) {
  std::set<std::string> seen;
  for (const auto& c : channels_) {
    if (c.name.empty()) throw ValidationError("channel name must not be empty");
    if (!seen.insert(c.name).second) throw ValidationError("duplicate channel '" + c.name + "'");
    if (c.dim < 1) throw ValidationError("channel '" + c.name + "' must have dim >= 1");
    if (!std::isfinite(c.sigma) || c.sigma <= 0.0) {
      throw ValidationError("channel '" + c.name + "' must have sigma > 0");
    }
    if (c.divergence == DivergenceKind::chi_square && c.kind != ChannelKind::histogram) {
      throw ValidationError("chi_square divergence requires a histogram channel ('" + c.name +
                            "')");
    }
  }
}

const ChannelSpec* ChannelSchema::find(std::string_view name) const {
  for (const auto& c : channels_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const ChannelSpec& ChannelSchema::at(std::string_view name) const {
  if (const auto* c = find(name)) return *c;
  throw ValidationError("unknown channel '" + std::string(name) + "'");
}

namespace {

std::string where(std::size_t line) {
  return line ? "line " + std::to_string(line) + ": " : std::string();
}

Point2 read_point(const json& j, const char* key, std::size_t line, std::size_t face) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ValidationError(where(line) + "face " + std::to_string(face) + " is missing '" + key +
                          "'");
  }
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    throw ParseError(std::string("'") + key + "' must be a [x, y] pair", line);
  }
  Point2 p{(*it)[0].get<double>(), (*it)[1].get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw ValidationError(where(line) + "face " + std::to_string(face) + " has non-finite '" +
                          key + "'");
  }
  return p;
}

void check_face_against_schema(const FaceRecord& face, const ChannelSchema& schema,
                               std::size_t line, std::size_t index) {
  for (const auto& spec : schema.channels()) {
    auto it = face.channels.find(spec.name);
    if (it == face.channels.end()) {
      throw ValidationError(where(line) + "face " + std::to_string(index) +
                            " is missing channel '" + spec.name + "'");
    }
    if (it->second.size() != spec.dim) {
      throw ValidationError(where(line) + "face " + std::to_string(index) + " channel '" +
                            spec.name + "' has dim " + std::to_string(it->second.size()) +
                            ", expected " + std::to_string(spec.dim));
    }
    if (spec.kind == ChannelKind::histogram) {
      for (double v : it->second) {
        if (v < 0.0) {
          throw ValidationError(where(line) + "face " + std::to_string(index) +
                                " has a negative histogram entry in channel '" + spec.name +
                                "'");
        }
      }
    }
  }
  for (const auto& [name, values] : face.channels) {
    if (!schema.find(name)) {
      throw ValidationError(where(line) + "face " + std::to_string(index) +
                            " has undeclared channel '" + name + "'");
    }
  }
}

}  // namespace

GroupRecord parse_group_record(std::string_view line, std::size_t line_number,
                               const ChannelSchema* schema) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), line_number);
  }
  if (!j.is_object()) throw ParseError("record must be an object", line_number);

  GroupRecord record;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) throw ParseError("record needs a string 'id'", line_number);
  record.id = id->get<std::string>();

  auto label = j.find("label");
  if (label == j.end() || !label->is_number()) {
    throw ParseError("record needs a numeric 'label'", line_number);
  }
  record.label = label->get<double>();
  if (!std::isfinite(record.label)) {
    throw ValidationError(where(line_number) + "label must be finite");
  }

  auto faces = j.find("faces");
  if (faces == j.end() || !faces->is_array()) {
    throw ParseError("record needs a 'faces' array", line_number);
  }
  if (faces->empty()) throw ValidationError(where(line_number) + "empty face set");

  record.faces.reserve(faces->size());
  for (std::size_t f = 0; f < faces->size(); ++f) {
    const json& jf = (*faces)[f];
    if (!jf.is_object()) throw ParseError("face must be an object", line_number);
    FaceRecord face;
    face.left_eye = read_point(jf, "left_eye", line_number, f);
    face.right_eye = read_point(jf, "right_eye", line_number, f);
    face.nose_tip = read_point(jf, "nose_tip", line_number, f);
    if (face.left_eye == face.right_eye) {
      throw ValidationError(where(line_number) + "face " + std::to_string(f) +
                            " has coincident eyes");
    }
    auto channels = jf.find("channels");
    if (channels == jf.end() || !channels->is_object()) {
      throw ParseError("face needs a 'channels' object", line_number);
    }
    for (const auto& [name, values] : channels->items()) {
      if (!values.is_array()) throw ParseError("channel '" + name + "' must be an array", line_number);
      FeatureVector v;
      v.reserve(values.size());
      for (const auto& x : values) {
        if (!x.is_number()) {
          throw ParseError("channel '" + name + "' must contain numbers", line_number);
        }
        v.push_back(x.get<double>());
        if (!std::isfinite(v.back())) {
          throw ValidationError(where(line_number) + "channel '" + name +
                                "' has a non-finite value");
        }
      }
      face.channels.emplace(name, std::move(v));
    }
    record.faces.push_back(std::move(face));
  }

  // All faces share the channel set and dimensionality of the first face.
  const auto& first = record.faces.front().channels;
  for (std::size_t f = 1; f < record.faces.size(); ++f) {
    const auto& ch = record.faces[f].channels;
    for (const auto& [name, v] : first) {
      auto it = ch.find(name);
      if (it == ch.end()) {
        throw ValidationError(where(line_number) + "face " + std::to_string(f) +
                              " is missing channel '" + name + "'");
      }
      if (it->second.size() != v.size()) {
        throw ValidationError(where(line_number) + "face " + std::to_string(f) + " channel '" +
                              name + "' has dim " + std::to_string(it->second.size()) +
                              ", expected " + std::to_string(v.size()));
      }
    }
    for (const auto& [name, v] : ch) {
      if (!first.contains(name)) {
        throw ValidationError(where(line_number) + "face 0 is missing channel '" + name + "'");
      }
    }
  }

  if (schema) {
    for (std::size_t f = 0; f < record.faces.size(); ++f) {
      check_face_against_schema(record.faces[f], *schema, line_number, f);
    }
  }
  return record;
}

std::vector<GroupRecord> parse_group_records(std::istream& in, const ChannelSchema* schema) {
  std::vector<GroupRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_group_record(line, line_number, schema));
  }
  return records;
}

std::vector<GroupRecord> load_group_records(const std::string& path, const ChannelSchema* schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset '" + path + "'");
  return parse_group_records(in, schema);
}

std::string serialize_group_record(const GroupRecord& record) {
  json faces = json::array();
  for (const auto& face : record.faces) {
    json channels = json::object();
    for (const auto& [name, values] : face.channels) channels[name] = values;
    faces.push_back({{"left_eye", {face.left_eye.x, face.left_eye.y}},
                     {"right_eye", {face.right_eye.x, face.right_eye.y}},
                     {"nose_tip", {face.nose_tip.x, face.nose_tip.y}},
                     {"channels", std::move(channels)}});
  }
  json j = {{"id", record.id}, {"label", record.label}, {"faces", std::move(faces)}};
  return j.dump();
}

void write_group_records(std::ostream& out, const std::vector<GroupRecord>& records) {
  for (const auto& r : records) out << serialize_group_record(r) << '\n';
}

ChannelSchema validate_schema(const std::vector<GroupRecord>& records) {
  if (records.empty()) throw ValidationError("no records");

  struct Seen {
    std::size_t dim = 0;
    bool non_negative = true;
  };
  std::map<std::string, Seen> seen;
  for (const auto& [name, v] : records.front().faces.front().channels) {
    seen[name].dim = v.size();
  }
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& record = records[r];
    if (record.faces.empty()) throw ValidationError("record '" + record.id + "': empty face set");
    for (std::size_t f = 0; f < record.faces.size(); ++f) {
      const auto& ch = record.faces[f].channels;
      if (ch.size() != seen.size()) {
        throw ValidationError("record '" + record.id + "' face " + std::to_string(f) +
                              " has a different channel set");
      }
      for (const auto& [name, v] : ch) {
        auto it = seen.find(name);
        if (it == seen.end()) {
          throw ValidationError("record '" + record.id + "' face " + std::to_string(f) +
                                " has unexpected channel '" + name + "'");
        }
        if (v.size() != it->second.dim) {
          throw ValidationError("inconsistent dimensionality for channel '" + name + "': " +
                                std::to_string(it->second.dim) + " vs " +
                                std::to_string(v.size()) + " in record '" + record.id + "'");
        }
        for (double x : v) {
          if (x < 0.0) it->second.non_negative = false;
        }
      }
    }
  }

  std::vector<ChannelSpec> specs;
  for (const auto& [name, s] : seen) {
    specs.push_back(default_channel_spec(
        name, s.dim, s.non_negative ? ChannelKind::histogram : ChannelKind::embedding));
  }
  return ChannelSchema(std::move(specs));
}

void validate_schema(const std::vector<GroupRecord>& records, const ChannelSchema& schema) {
  if (records.empty()) throw ValidationError("no records");
  for (const auto& record : records) {
    for (std::size_t f = 0; f < record.faces.size(); ++f) {
      try {
        check_face_against_schema(record.faces[f], schema, 0, f);
      } catch (const ValidationError& e) {
        throw ValidationError("record '" + record.id + "': " + e.what());
      }
    }
  }
}

ChannelSchema parse_schema(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed schema: ") + e.what());
  }
  auto channels = j.find("channels");
  if (!j.is_object() || channels == j.end() || !channels->is_array()) {
    throw ParseError("schema needs a 'channels' array");
  }
  std::vector<ChannelSpec> specs;
  for (const auto& c : *channels) {
    if (!c.is_object() || !c.contains("name") || !c.contains("dim") || !c.contains("kind")) {
      throw ParseError("schema channel needs 'name', 'dim' and 'kind'");
    }
    const auto dim = c.at("dim");
    if (!dim.is_number_integer() || dim.get<long long>() < 1) {
      throw ValidationError("schema channel dim must be a positive integer");
    }
    ChannelSpec spec = default_channel_spec(c.at("name").get<std::string>(),
                                            dim.get<std::size_t>(),
                                            parse_channel_kind(c.at("kind").get<std::string>()));
    if (c.contains("divergence")) {
      spec.divergence = parse_divergence(c.at("divergence").get<std::string>());
    }
    if (c.contains("sigma")) spec.sigma = c.at("sigma").get<double>();
    specs.push_back(std::move(spec));
  }
  return ChannelSchema(std::move(specs));
}

ChannelSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open schema '" + path + "'");
  return parse_schema(in);
}

void write_schema(std::ostream& out, const ChannelSchema& schema) {
  json channels = json::array();
  for (const auto& c : schema.channels()) {
    channels.push_back({{"name", c.name},
                        {"dim", c.dim},
                        {"kind", to_string(c.kind)},
                        {"divergence", to_string(c.divergence)},
                        {"sigma", c.sigma}});
  }
  out << json{{"channels", std::move(channels)}}.dump(2) << '\n';
}

std::uint64_t dataset_hash(const std::vector<GroupRecord>& records) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& r : records) {
    mix(r.id.data(), r.id.size());
    const unsigned char sep = 0;
    mix(&sep, 1);
    mix(&r.label, sizeof r.label);
  }
  return h;
}

std::string hash_to_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::uint64_t hash_from_hex(std::string_view text) {
  std::uint64_t h = 0;
  if (text.empty() || text.size() > 16) throw ParseError("bad hash '" + std::string(text) + "'");
  for (char c : text) {
    h <<= 4;
    if (c >= '0' && c <= '9') h |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') h |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw ParseError("bad hash '" + std::string(text) + "'");
  }
  return h;
}

}  // namespace cgak
