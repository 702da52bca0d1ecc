#include "spg/io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spg {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'G', '1'};

[[noreturn]] void fail(const std::string& message) { throw std::runtime_error(message); }

std::string at_line(std::size_t line) { return " (line " + std::to_string(line) + ")"; }
std::string at_byte(std::size_t offset) {
  return " (byte offset " + std::to_string(offset) + ")";
}

// Locale-independent number formatting/parsing: '.' decimal separator,
// shortest representation that round-trips exactly.
std::string format_double(double v) {
  char buffer[64];
  const auto res = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, res.ptr);
}

// Whitespace-token reader over one line.
class LineTokens {
 public:
  LineTokens(const std::string& line, std::size_t line_number)
      : stream_(line), line_(line_number) {}

  std::string word(const char* what) {
    std::string token;
    if (!(stream_ >> token)) fail(std::string("missing ") + what + at_line(line_));
    return token;
  }

  double real(const char* what) {
    const std::string token = word(what);
    double value = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
      fail(std::string("invalid ") + what + at_line(line_));
    return value;
  }

  long long integer(const char* what) {
    const std::string token = word(what);
    long long value = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
      fail(std::string("invalid ") + what + at_line(line_));
    return value;
  }

  bool more() {
    stream_ >> std::ws;
    return stream_.peek() != std::char_traits<char>::eof();
  }

  void expect_end() {
    if (more()) fail("trailing tokens" + at_line(line_));
  }

  void expect_keyword(const char* keyword) {
    const std::string token = word(keyword);
    if (token != keyword)
      fail(std::string("expected '") + keyword + "', got '" + token + "'" + at_line(line_));
  }

  std::size_t line_number() const { return line_; }

 private:
  std::istringstream stream_;
  std::size_t line_;
};

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : stream_(path) {
    if (!stream_) fail("cannot open " + path.string());
  }

  LineTokens next(const char* what) {
    std::string line;
    if (!std::getline(stream_, line)) fail(std::string("missing ") + what + at_line(line_ + 1));
    ++line_;
    return LineTokens(line, line_);
  }

  bool eof() {
    return stream_.peek() == std::char_traits<char>::eof();
  }

  std::size_t line_number() const { return line_; }

 private:
  std::ifstream stream_;
  std::size_t line_ = 0;
};

Box6 read_box(LineTokens& tokens) {
  tokens.expect_keyword("box");
  Box6 box;
  const char* names[6] = {"cx", "cy", "cz", "sx", "sy", "sz"};
  for (int i = 0; i < 6; ++i) box[i] = tokens.real(names[i]);
  for (int i = 0; i < 6; ++i)
    if (!std::isfinite(box[i])) fail("invalid box value" + at_line(tokens.line_number()));
  for (int i = 3; i < 6; ++i)
    if (box[i] <= 0.0) fail("non-positive box size" + at_line(tokens.line_number()));
  tokens.expect_end();
  return box;
}

void write_box(std::ostream& out, const Box6& box) {
  out << "box";
  for (double v : box) out << ' ' << format_double(v);
  out << '\n';
}

std::vector<std::uint8_t> read_mask(LineTokens& tokens, std::size_t expected) {
  tokens.expect_keyword("mask");
  std::vector<std::pair<int, std::size_t>> runs;
  while (tokens.more()) {
    const long long value = tokens.integer("run value");
    if (value != 0 && value != 1) fail("invalid run value" + at_line(tokens.line_number()));
    const long long count = tokens.integer("run count");
    if (count < 1) fail("invalid run count" + at_line(tokens.line_number()));
    runs.emplace_back(static_cast<int>(value), static_cast<std::size_t>(count));
  }
  std::vector<std::uint8_t> mask = rle_decode(runs);
  if (mask.size() != expected)
    fail("mask runs sum to " + std::to_string(mask.size()) + ", expected " +
         std::to_string(expected) + at_line(tokens.line_number()));
  return mask;
}

void write_mask(std::ostream& out, std::span<const std::uint8_t> mask) {
  out << "mask";
  for (const auto& [value, count] : rle_encode(mask)) out << ' ' << value << ' ' << count;
  out << '\n';
}

PointCloud parse_scene_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);

  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in) fail("truncated scene: missing point count" + at_byte(4));
  if (count == 0) fail("empty input");

  const std::size_t payload = static_cast<std::size_t>(count) * 6;
  std::vector<float> values(payload);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(payload * 4));
  if (static_cast<std::size_t>(in.gcount()) != payload * 4)
    fail("truncated scene: expected " + std::to_string(payload * 4) + " payload bytes, got " +
         std::to_string(in.gcount()) + at_byte(8));

  PointCloud cloud;
  cloud.positions.resize(count);
  cloud.colors.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const float* record = values.data() + static_cast<std::size_t>(i) * 6;
    const std::size_t offset = 8 + static_cast<std::size_t>(i) * 24;
    for (int c = 0; c < 6; ++c)
      if (!std::isfinite(record[c])) fail("invalid coordinate" + at_byte(offset + c * 4));
    cloud.positions[i] = Vec3(record[0], record[1], record[2]);
    for (int c = 3; c < 6; ++c)
      if (record[c] < 0.0f || record[c] > 1.0f) fail("invalid color" + at_byte(offset + c * 4));
    cloud.colors[i] = Vec3(record[3], record[4], record[5]);
  }
  return cloud;
}

PointCloud parse_scene_ascii(const std::filesystem::path& path) {
  LineReader reader(path);
  LineTokens header = reader.next("scene header");
  const long long declared = header.integer("point count");
  header.expect_end();
  if (declared < 1) fail("empty input");

  PointCloud cloud;
  cloud.positions.reserve(declared);
  cloud.colors.reserve(declared);
  for (long long i = 0; i < declared; ++i) {
    if (reader.eof())
      fail("truncated scene: expected " + std::to_string(declared) + " records, got " +
           std::to_string(i) + at_line(reader.line_number() + 1));
    LineTokens tokens = reader.next("scene record");
    double record[6];
    for (double& v : record) v = tokens.real("coordinate");
    tokens.expect_end();
    for (int c = 0; c < 3; ++c)
      if (!std::isfinite(record[c])) fail("invalid coordinate" + at_line(tokens.line_number()));
    for (int c = 3; c < 6; ++c)
      if (!std::isfinite(record[c]) || record[c] < 0.0 || record[c] > 1.0)
        fail("invalid color" + at_line(tokens.line_number()));
    cloud.positions.emplace_back(record[0], record[1], record[2]);
    cloud.colors.emplace_back(record[3], record[4], record[5]);
  }
  return cloud;
}

}  // namespace

PointCloud parse_scene(const std::filesystem::path& path) {
  char magic[4] = {};
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) fail("cannot open " + path.string());
    probe.read(magic, 4);
  }
  if (std::memcmp(magic, kMagic, 4) == 0) return parse_scene_binary(path);
  return parse_scene_ascii(path);
}

void write_scene_ascii(const std::filesystem::path& path, const PointCloud& cloud) {
  cloud.validate();
  std::ofstream out(path);
  if (!out) fail("cannot open " + path.string());
  out << cloud.size() << '\n';
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    const Vec3& c = cloud.colors[i];
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z())
        << ' ' << format_double(c.x()) << ' ' << format_double(c.y()) << ' '
        << format_double(c.z()) << '\n';
  }
  if (!out) fail("write failed: " + path.string());
}

void write_scene_binary(const std::filesystem::path& path, const PointCloud& cloud) {
  cloud.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open " + path.string());
  out.write(kMagic, 4);
  const std::uint32_t count = static_cast<std::uint32_t>(cloud.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    float record[6] = {static_cast<float>(cloud.positions[i].x()),
                       static_cast<float>(cloud.positions[i].y()),
                       static_cast<float>(cloud.positions[i].z()),
                       static_cast<float>(cloud.colors[i].x()),
                       static_cast<float>(cloud.colors[i].y()),
                       static_cast<float>(cloud.colors[i].z())};
    out.write(reinterpret_cast<const char*>(record), sizeof(record));
  }
  if (!out) fail("write failed: " + path.string());
}

std::vector<std::pair<int, std::size_t>> rle_encode(std::span<const std::uint8_t> mask) {
  std::vector<std::pair<int, std::size_t>> runs;
  for (std::uint8_t raw : mask) {
    const int value = raw ? 1 : 0;
    if (!runs.empty() && runs.back().first == value)
      ++runs.back().second;
    else
      runs.emplace_back(value, 1);
  }
  return runs;
}

std::vector<std::uint8_t> rle_decode(std::span<const std::pair<int, std::size_t>> runs) {
  std::vector<std::uint8_t> mask;
  for (const auto& [value, count] : runs)
    mask.insert(mask.end(), count, static_cast<std::uint8_t>(value ? 1 : 0));
  return mask;
}

void write_prediction(const std::filesystem::path& path, const Prediction& prediction) {
  std::ofstream out(path);
  if (!out) fail("cannot open " + path.string());
  write_box(out, prediction.box);
  out << "score " << format_double(prediction.score) << '\n';
  write_mask(out, prediction.mask);
  if (!out) fail("write failed: " + path.string());
}

Prediction parse_prediction(const std::filesystem::path& path) {
  LineReader reader(path);
  Prediction prediction;

  LineTokens box_line = reader.next("box line");
  prediction.box = read_box(box_line);

  LineTokens score_line = reader.next("score line");
  score_line.expect_keyword("score");
  prediction.score = score_line.real("score");
  score_line.expect_end();

  LineTokens mask_line = reader.next("mask line");
  mask_line.expect_keyword("mask");
  std::vector<std::pair<int, std::size_t>> runs;
  while (mask_line.more()) {
    const long long value = mask_line.integer("run value");
    if (value != 0 && value != 1) fail("invalid run value" + at_line(mask_line.line_number()));
    const long long count = mask_line.integer("run count");
    if (count < 1) fail("invalid run count" + at_line(mask_line.line_number()));
    runs.emplace_back(static_cast<int>(value), static_cast<std::size_t>(count));
  }
  if (runs.empty()) fail("empty mask" + at_line(mask_line.line_number()));
  prediction.mask = rle_decode(runs);
  return prediction;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruthFile& file) {
  std::ofstream out(path);
  if (!out) fail("cannot open " + path.string());
  out << "gtfile " << file.records.size() << ' ' << file.point_count << '\n';
  for (const GroundTruthRecord& record : file.records) {
    out << "sample " << record.id << '\n';
    out << "category " << (record.category == Category::kUnique ? "unique" : "multiple")
        << '\n';
    write_box(out, record.box);
    write_mask(out, record.mask);
  }
  if (!out) fail("write failed: " + path.string());
}

GroundTruthFile parse_ground_truth(const std::filesystem::path& path) {
  LineReader reader(path);
  GroundTruthFile file;

  LineTokens header = reader.next("gtfile header");
  header.expect_keyword("gtfile");
  const long long records = header.integer("record count");
  const long long points = header.integer("point count");
  header.expect_end();
  if (records < 1) fail("ground truth holds no records" + at_line(1));
  if (points < 1) fail("invalid point count" + at_line(1));
  file.point_count = static_cast<std::size_t>(points);

  for (long long r = 0; r < records; ++r) {
    GroundTruthRecord record;

    LineTokens id_line = reader.next("sample line");
    id_line.expect_keyword("sample");
    record.id = id_line.word("sample id");
    id_line.expect_end();

    LineTokens category_line = reader.next("category line");
    category_line.expect_keyword("category");
    const std::string category = category_line.word("category");
    if (category == "unique")
      record.category = Category::kUnique;
    else if (category == "multiple")
      record.category = Category::kMultiple;
    else
      fail("unknown category '" + category + "'" + at_line(category_line.line_number()));
    category_line.expect_end();

    LineTokens box_line = reader.next("box line");
    record.box = read_box(box_line);

    LineTokens mask_line = reader.next("mask line");
    record.mask = read_mask(mask_line, file.point_count);

    file.records.push_back(std::move(record));
  }
  return file;
}

}  // namespace spg
