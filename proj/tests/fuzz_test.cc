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

#include <gtest/gtest.h>

#include "loader_fuzz.h"
#include "test_util.h"

namespace pmil {
namespace {

TEST(LoaderFuzz, OnlyTypedErrors) {
  testing::TempDir dir;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto out = testing::RunLoaderFuzz(dir.path() / std::to_string(seed),
                                            1000, seed);
    EXPECT_EQ(out.cases, 1000u);
    for (const std::string& line : out.untyped) ADD_FAILURE() << line;
    EXPECT_GT(out.typed_errors, 500u) << "mutations rarely reached a loader error";
  }
}

TEST(LoaderFuzz, PristineCorpusLoads) {
  testing::TempDir dir;
  for (const auto& target : testing::MakeFuzzCorpus(dir.path())) {
    EXPECT_NO_THROW(target.load()) << target.name;
  }
}

TEST(LoaderFuzz, MutationIsDeterministic) {
  std::mt19937_64 a(9);
  std::mt19937_64 b(9);
  const std::string base(200, 'x');
  for (int i = 0; i < 50; ++i) EXPECT_EQ(testing::MutateBytes(base, a), testing::MutateBytes(base, b));
}

}  // namespace
}  // namespace pmil
