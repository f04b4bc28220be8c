#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "rimamba/errors.hpp"
#include "rimamba/learn_eval.hpp"

namespace rimamba {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}
  std::uint64_t uint(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw FormatError(std::string("EMB1: truncated ") + what + " at byte offset " + std::to_string(pos_));
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {(std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<std::uint8_t> encode_emb1(const EmbeddingFile& file) {
  if (file.ids.size() != file.rows.rows()) throw ArgumentError("EMB1: id count does not match row count");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, file.rows.rows(), 4);
  put_le(out, file.rows.cols(), 4);
  for (std::size_t r = 0; r < file.rows.rows(); ++r) {
    const std::string& id = file.ids[r];
    if (id.size() > UINT16_MAX) throw ArgumentError("EMB1: id too long");
    put_le(out, id.size(), 2);
    out.insert(out.end(), id.begin(), id.end());
    for (float v : file.rows.row(r)) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_le(out, bits, 4);
    }
  }
  return out;
}

EmbeddingFile decode_emb1(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("EMB1: bad magic at byte offset 0");
  const auto n = static_cast<std::size_t>(r.uint(4, "record count"));
  const auto d = static_cast<std::size_t>(r.uint(4, "dimension"));
  EmbeddingFile file;
  file.rows = Matrix<float>(n, d);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t at = r.offset();
    const auto len = static_cast<std::size_t>(r.uint(2, "id length"));
    std::string id(r.take(len, "id"));
    if (!seen.insert(id).second) throw FormatError("EMB1: duplicate id '" + id + "' at byte offset " + std::to_string(at));
    file.ids.push_back(std::move(id));
    for (float& v : file.rows.row(i)) {
      const auto bits = static_cast<std::uint32_t>(r.uint(4, "embedding"));
      std::memcpy(&v, &bits, sizeof v);
    }
  }
  if (!r.done()) throw FormatError("EMB1: trailing data at byte offset " + std::to_string(r.offset()));
  return file;
}

void save_emb1(const EmbeddingFile& file, const std::filesystem::path& path) {
  const auto bytes = encode_emb1(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

EmbeddingFile load_emb1(const std::filesystem::path& path) {
  try {
    return decode_emb1(slurp(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

bool is_emb1_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char head[4] = {};
  in.read(head, 4);
  return in.gcount() == 4 && std::memcmp(head, kMagic, 4) == 0;
}

GroundTruth parse_ground_truth(std::string_view text) {
  GroundTruth truth;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size())
      throw FormatError("ground truth line " + std::to_string(line_no) + ": expected query_id<TAB>relevant_ids");
    const std::string query(line.substr(0, tab));
    auto& rel = truth[query];
    std::string_view rest = line.substr(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view id = rest.substr(0, comma);
      if (id.empty()) throw FormatError("ground truth line " + std::to_string(line_no) + ": empty relevant id");
      rel.emplace_back(id);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
      if (rest.empty()) throw FormatError("ground truth line " + std::to_string(line_no) + ": trailing comma");
    }
  }
  return truth;
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  try {
    return parse_ground_truth(slurp(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace rimamba
