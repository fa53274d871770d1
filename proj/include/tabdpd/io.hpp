#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include "tabdpd/error.hpp"

namespace tabdpd {

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content)
{
   static std::atomic<unsigned> counter{0};
   if (path.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path.parent_path(), ec);
   }
   std::filesystem::path tmp = path;
   tmp += ".tmp" + std::to_string(counter++);
   {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write " + tmp.string());
      out << content;
      out.flush();
      if (!out) throw IoError("cannot write " + tmp.string());
   }
   std::error_code ec;
   std::filesystem::rename(tmp, path, ec);
   if (ec) {
      std::filesystem::remove(tmp, ec);
      throw IoError("cannot write " + path.string());
   }
}

} // namespace tabdpd
