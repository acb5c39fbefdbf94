/* Copyright 2026 The vsrcap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "vsrcap/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include "vsrcap/error.hpp"

namespace vsrcap {

namespace {

void write_u64(std::ofstream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::ifstream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw Error(ErrorCode::kIoError, "truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_string(std::ofstream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& is) {
  const auto n = read_u64(is);
  if (n > (1u << 20)) throw Error(ErrorCode::kIoError, "corrupt checkpoint");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw Error(ErrorCode::kIoError, "truncated checkpoint");
  return s;
}

double bits_to_double(std::uint64_t bits) {
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

std::uint64_t double_to_bits(double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof d);
  return bits;
}

std::ifstream open_checked(const std::string& path, std::string& fingerprint) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::string magic = read_string(is);
  if (magic != kCheckpointMagic) {
    throw Error(ErrorCode::kIoError, path + " is not a checkpoint");
  }
  fingerprint = read_string(is);
  return is;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

void save_checkpoint(const nn::ParameterStore& store, const std::string& path,
                     const std::string& fingerprint) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot write " + path);
  write_string(os, std::string(kCheckpointMagic));
  write_string(os, fingerprint);
  const auto params = store.all();
  write_u64(os, params.size());
  for (const auto* p : params) {
    write_string(os, p->name());
    write_u64(os, static_cast<std::uint64_t>(p->value.rows()));
    write_u64(os, static_cast<std::uint64_t>(p->value.cols()));
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      write_u64(os, double_to_bits(p->value.data()[k]));
    }
  }
  if (!os) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

void load_checkpoint(nn::ParameterStore& store, const std::string& path,
                     const std::string& fingerprint) {
  std::string stored;
  auto is = open_checked(path, stored);
  if (stored != fingerprint) {
    throw Error(ErrorCode::kFingerprintMismatch,
                path + " was written for config " + stored + ", expected " +
                    fingerprint);
  }
  std::map<std::string, ad::Matrix> arrays;
  const auto count = read_u64(is);
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name = read_string(is);
    const auto rows = static_cast<Eigen::Index>(read_u64(is));
    const auto cols = static_cast<Eigen::Index>(read_u64(is));
    ad::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = bits_to_double(read_u64(is));
    }
    arrays.emplace(std::move(name), std::move(m));
  }
  for (auto* p : store.all()) {
    auto it = arrays.find(p->name());
    if (it == arrays.end()) {
      throw Error(ErrorCode::kShapeMismatch, path + " lacks " + p->name());
    }
    if (it->second.rows() != p->value.rows() ||
        it->second.cols() != p->value.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "shape of " + p->name());
    }
    p->value = it->second;
  }
}

std::string read_checkpoint_fingerprint(const std::string& path) {
  std::string fingerprint;
  open_checked(path, fingerprint);
  return fingerprint;
}

}  // namespace vsrcap
