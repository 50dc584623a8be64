// Copyright 2026 The PMIL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pmil/data.h"
#include "pmil/error.h"

namespace pmil {

namespace {

constexpr std::string_view kTubeHeader = "instance,frame,x,y,w,h";

template <typename T>
bool ParseField(std::string_view text, T& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

void AppendDouble(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

std::vector<Tube> ReadTubeFile(const std::filesystem::path& path,
                               std::size_t count, std::uint32_t frames,
                               std::uint32_t width, std::uint32_t height) {
  const std::string text = ReadFile(path);
  std::vector<Tube> tubes(count);
  for (Tube& t : tubes) {
    t.video_frame_count = frames;
    t.video_width = width;
    t.video_height = height;
  }
  bool seen_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!seen_header) {
      if (line != kTubeHeader) {
        throw Error(ErrorKind::kCorruptFile,
                    where + ": expected header '" + std::string(kTubeHeader) + "'");
      }
      seen_header = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 6) {
      throw Error(ErrorKind::kCorruptFile, where + ": expected 6 fields");
    }
    std::size_t instance = 0;
    TubeEntry entry;
    if (!ParseField(fields[0], instance) || !ParseField(fields[1], entry.frame) ||
        !ParseField(fields[2], entry.box.x) ||
        !ParseField(fields[3], entry.box.y) ||
        !ParseField(fields[4], entry.box.w) ||
        !ParseField(fields[5], entry.box.h)) {
      throw Error(ErrorKind::kCorruptFile, where + ": malformed record");
    }
    if (instance >= count) {
      throw Error(ErrorKind::kCorruptFile,
                  where + ": instance index " + std::to_string(instance) +
                      " out of range for " + std::to_string(count) +
                      " instances");
    }
    tubes[instance].entries.push_back(entry);
  }
  if (!seen_header) {
    throw Error(ErrorKind::kCorruptFile, path.string() + ": missing header");
  }
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    try {
      ValidateTube(tubes[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": instance " + std::to_string(i) +
                                ": " + e.what());
    }
  }
  return tubes;
}

void WriteTubeFile(const std::filesystem::path& path,
                   std::span<const Tube> tubes) {
  std::string out(kTubeHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    for (const TubeEntry& e : tubes[i].entries) {
      out.append(std::to_string(i));
      out.push_back(',');
      out.append(std::to_string(e.frame));
      for (double v : {e.box.x, e.box.y, e.box.w, e.box.h}) {
        out.push_back(',');
        AppendDouble(out, v);
      }
      out.push_back('\n');
    }
  }
  WriteFile(path, out);
}

}  // namespace pmil
