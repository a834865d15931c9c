#include "unrealdc/minidoom.hpp"

#include <fstream>
#include <sstream>

namespace unrealdc::minidoom {

namespace {

std::string located(const std::string& what, int line, int column) {
  std::ostringstream os;
  os << "map parse error at line " << line;
  if (column > 0) os << ", column " << column;
  os << ": " << what;
  return os.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

MapParseError::MapParseError(const std::string& what, int line, int column)
    : std::runtime_error(located(what, line, column)), line_(line), column_(column) {}

MapSpec load_map(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw MapParseError("empty map", 1, 0);

  MapSpec map;
  map.height = static_cast<int>(lines.size());
  map.width = static_cast<int>(lines.front().size());
  if (map.width == 0) throw MapParseError("empty row", 1, 0);
  map.cells.reserve(static_cast<std::size_t>(map.width * map.height));

  for (int y = 0; y < map.height; ++y) {
    const auto row = lines[static_cast<std::size_t>(y)];
    if (static_cast<int>(row.size()) != map.width) {
      throw MapParseError("non-rectangular grid (expected " + std::to_string(map.width) +
                              " columns, found " + std::to_string(row.size()) + ")",
                          y + 1, 0);
    }
    for (int x = 0; x < map.width; ++x) {
      const char ch = row[static_cast<std::size_t>(x)];
      const Coord c{x, y};
      switch (ch) {
        case '#': map.cells.push_back(Cell::Wall); break;
        case '.': map.cells.push_back(Cell::Floor); break;
        case 'S': map.cells.push_back(Cell::Floor); map.agent_spawns.push_back(c); break;
        case 'M': map.cells.push_back(Cell::Floor); map.monster_spawns.push_back(c); break;
        case 'O': map.cells.push_back(Cell::Floor); map.object_spawns.push_back(c); break;
        default:
          throw MapParseError(std::string("unknown character '") + ch + "'", y + 1, x + 1);
      }
    }
  }

  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const bool border = x == 0 || y == 0 || x == map.width - 1 || y == map.height - 1;
      if (border && map.at({x, y}) != Cell::Wall) {
        throw MapParseError("unwalled border", y + 1, x + 1);
      }
    }
  }
  if (map.agent_spawns.empty()) throw MapParseError("no agent spawn ('S')", map.height, 0);
  return map;
}

MapSpec load_map_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open map file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_map(buf.str());
}

std::string map_to_text(const MapSpec& map) {
  std::string out;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) out.push_back(map.at({x, y}) == Cell::Wall ? '#' : '.');
    out.push_back('\n');
  }
  auto mark = [&](const std::vector<Coord>& cells, char ch) {
    for (const auto c : cells) out[static_cast<std::size_t>(c.y * (map.width + 1) + c.x)] = ch;
  };
  mark(map.agent_spawns, 'S');
  mark(map.monster_spawns, 'M');
  mark(map.object_spawns, 'O');
  return out;
}

}  // namespace unrealdc::minidoom
