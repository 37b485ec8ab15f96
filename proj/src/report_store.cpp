// Copyright 2026 The pedwatch Authors
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

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>

#include <spdlog/spdlog.h>

#include "pedwatch/analyzer.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/reporter.hpp"

namespace pedwatch {

namespace fs = std::filesystem;

namespace {

std::string sanitize(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

void write_all_fsync(const fs::path& file, const std::string& bytes) {
  const int fd = ::open(file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::Io, "cannot open " + file.string() + ": " + std::strerror(errno));
  }
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw Error(ErrorCode::Io, "write to " + file.string() + " failed: " + std::strerror(err));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    const int err = errno;
    ::close(fd);
    throw Error(ErrorCode::Io, "fsync of " + file.string() + " failed: " + std::strerror(err));
  }
  ::close(fd);
}

}  // namespace

ReportStore::ReportStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw Error(ErrorCode::Io, "cannot create store directory " + dir_.string());
  }
  refresh();
}

ReportStore::Key ReportStore::key_of(const HourlyReport& r) {
  return {r.aggregate.intersection_id, std::llround(r.aggregate.hour_start * 1000.0)};
}

fs::path ReportStore::file_for(std::string_view intersection_id) const {
  return dir_ / (sanitize(intersection_id) + ".jsonl");
}

void ReportStore::load_file_locked(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return;
  auto& offset = offsets_[file];
  in.seekg(static_cast<std::streamoff>(offset));
  std::string line;
  while (true) {
    const auto start = in.tellg();
    if (!std::getline(in, line)) break;
    if (in.eof()) {
      break;  // no trailing newline yet: incomplete record
    }
    offset = static_cast<std::uintmax_t>(start) + line.size() + 1;
    if (line.empty()) continue;
    try {
      HourlyReport r = report_from_json(nlohmann::json::parse(line));
      auto key = key_of(r);
      if (!index_.emplace(std::move(key), std::move(r)).second) {
        spdlog::warn("{}: duplicate record key ignored", file.string());
      }
    } catch (const std::exception& e) {
      spdlog::warn("{}: unreadable record skipped: {}", file.string(), e.what());
    }
  }
}

void ReportStore::refresh() {
  std::unique_lock lock(mu_);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    load_file_locked(f);
  }
}

void ReportStore::append(const HourlyReport& report) {
  std::unique_lock lock(mu_);
  auto key = key_of(report);
  const fs::path file = file_for(report.aggregate.intersection_id);
  load_file_locked(file);
  if (index_.count(key)) {
    throw Error(ErrorCode::DuplicateKey, "report for " + report.aggregate.intersection_id + " at " +
                                             format_rfc3339(report.aggregate.hour_start,
                                                            report.aggregate.utc_offset_minutes) +
                                             " already stored");
  }
  // A torn tail from an interrupted write is discarded before appending.
  std::error_code ec;
  const auto size = fs::exists(file, ec) ? fs::file_size(file, ec) : 0;
  if (!ec && size > offsets_[file]) {
    spdlog::warn("{}: truncating {} bytes of incomplete record", file.string(), size - offsets_[file]);
    fs::resize_file(file, offsets_[file], ec);
    if (ec) {
      throw Error(ErrorCode::Io, "cannot truncate " + file.string() + ": " + ec.message());
    }
  }
  const std::string line = encode_report_record(report) + "\n";
  write_all_fsync(file, line);
  offsets_[file] += line.size();
  index_.emplace(std::move(key), report);
}

std::vector<HourlyReport> ReportStore::query(std::string_view intersection_id, Timestamp from,
                                             Timestamp to) const {
  if (from > to) {
    throw Error(ErrorCode::InvalidArgument, "query range is inverted");
  }
  std::shared_lock lock(mu_);
  std::vector<HourlyReport> out;
  for (const auto& [key, r] : index_) {
    if (!intersection_id.empty() && key.first != intersection_id) continue;
    if (r.aggregate.hour_start >= from && r.aggregate.hour_start < to) {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<HourlyReport> ReportStore::all() const {
  std::shared_lock lock(mu_);
  std::vector<HourlyReport> out;
  out.reserve(index_.size());
  for (const auto& [_, r] : index_) out.push_back(r);
  return out;
}

std::optional<HourlyReport> ReportStore::get(std::string_view intersection_id,
                                             Timestamp hour_start) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(Key{std::string(intersection_id), std::llround(hour_start * 1000.0)});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ReportStore::intersections() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [key, _] : index_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  return out;
}

std::size_t ReportStore::size() const {
  std::shared_lock lock(mu_);
  return index_.size();
}

}  // namespace pedwatch
