// Copyright (c) 2026 The mixemb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mixemb/checkpoint.h"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace mixemb {

void save_checkpoint(const std::string& dir,
                     const std::vector<std::pair<std::string, Tensor>>& tensors,
                     const nlohmann::json& extra) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("save_checkpoint: cannot create " + dir);

  nlohmann::json meta;
  meta["dtype"] = "f64le";
  nlohmann::json list = nlohmann::json::array();
  int64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    list.push_back(nlohmann::json{
        {"name", name}, {"shape", t.shape()}, {"offset", offset},
        {"numel", t.numel()}});
    offset += t.numel();
  }
  meta["tensors"] = std::move(list);
  meta["extra"] = extra;

  std::string meta_path = (fs::path(dir) / "meta.json").string();
  std::ofstream mf(meta_path);
  if (!mf) throw IoError("save_checkpoint: cannot open " + meta_path);
  mf << meta.dump(2) << "\n";

  std::string bin_path = (fs::path(dir) / "tensors.bin").string();
  std::ofstream bf(bin_path, std::ios::binary);
  if (!bf) throw IoError("save_checkpoint: cannot open " + bin_path);
  for (const auto& [name, t] : tensors) {
    bf.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!bf) throw IoError("save_checkpoint: write failed for " + bin_path);
}

Checkpoint load_checkpoint(const std::string& dir) {
  std::string meta_path = (fs::path(dir) / "meta.json").string();
  std::ifstream mf(meta_path);
  if (!mf) throw IoError("load_checkpoint: cannot open " + meta_path);
  nlohmann::json meta;
  try {
    mf >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_checkpoint: bad meta.json in " + dir + ": " + e.what());
  }

  std::string bin_path = (fs::path(dir) / "tensors.bin").string();
  std::ifstream bf(bin_path, std::ios::binary);
  if (!bf) throw IoError("load_checkpoint: cannot open " + bin_path);
  std::vector<char> raw((std::istreambuf_iterator<char>(bf)),
                        std::istreambuf_iterator<char>());

  Checkpoint ck;
  ck.extra = meta.at("extra");
  for (const auto& jt : meta.at("tensors")) {
    std::string name = jt.at("name").get<std::string>();
    std::vector<int> shape = jt.at("shape").get<std::vector<int>>();
    int64_t offset = jt.at("offset").get<int64_t>();
    int64_t numel = jt.at("numel").get<int64_t>();
    if ((offset + numel) * static_cast<int64_t>(sizeof(double)) >
        static_cast<int64_t>(raw.size()))
      throw IoError("load_checkpoint: tensors.bin truncated for " + name);
    std::vector<double> v(static_cast<size_t>(numel));
    std::memcpy(v.data(), raw.data() + offset * sizeof(double),
                static_cast<size_t>(numel) * sizeof(double));
    ck.tensors.emplace(name, Tensor(shape, std::move(v)));
  }
  return ck;
}

std::string checkpoint_hash(const std::string& dir) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  for (const char* file : {"meta.json", "tensors.bin"}) {
    std::string path = (fs::path(dir) / file).string();
    std::ifstream f(path, std::ios::binary);
    if (!f) {
      EVP_MD_CTX_free(ctx);
      throw IoError("checkpoint_hash: cannot open " + path);
    }
    char buf[1 << 16];
    while (f) {
      f.read(buf, sizeof(buf));
      EVP_DigestUpdate(ctx, buf, static_cast<size_t>(f.gcount()));
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace mixemb
