// Copyright 2026 The CanonSLR Authors
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

#include <set>

#include "canonslr/dataset.h"
#include "canonslr/error.h"
#include "doctest.h"
#include "support.h"

namespace canonslr {
namespace {

using testing::ScratchDir;
using testing::slurp;

GenerationConfig tiny_config() {
  GenerationConfig c;
  c.train_sources = 8;
  c.dev_sources = 1;
  c.test_sources = 1;
  c.height = 16;
  c.width = 16;
  c.seed = 3;
  return c;
}

TEST_CASE("view table") {
  CHECK(kAllViews.size() == 7);
  for (View v : kAllViews) CHECK(parse_view(view_name(v)) == v);
  CHECK(view_angle(View::kR90).yaw_deg == 90);
  CHECK(view_angle(View::kL60).yaw_deg == -60);
  CHECK(view_angle(View::kU30).pitch_deg == 30);
  CHECK(view_angle(View::kD30).pitch_deg == -30);
  CHECK(view_angle(View::kFront).yaw_deg == 0);
  CHECK_THROWS_AS(parse_view("R30"), InvalidArgument);
  std::set<View> covered;
  for (auto c : kAllCategories) {
    for (View v : category_views(c)) CHECK(covered.insert(v).second);
  }
  CHECK(covered.size() == 7);
  CHECK(category_views(ViewCategory::kLargeAngle) == std::vector<View>{View::kR90, View::kL60});
}

TEST_CASE("generation counts, label inheritance and determinism") {
  ScratchDir a("gen_a"), b("gen_b");
  const auto m = generate_dataset(tiny_config(), a.path());
  CHECK(m.entries.size() == 70);
  CHECK(m.select(Split::kTrain).size() == 56);
  CHECK(m.select(Split::kDev).size() == 7);
  CHECK(m.select(Split::kTest, View::kR45).size() == 1);
  validate_manifest(m);
  for (const auto& e : m.entries) {
    const auto& front = m.find(e.source_id, View::kFront);
    CHECK(e.glosses == front.glosses);
    CHECK(e.frames == front.frames);
    CHECK(e.split == front.split);
    const auto frames = read_frames(m.frame_file(e));
    CHECK(frames.shape() == Shape{e.frames, 3, 16, 16});
    for (float v : frames.values()) {
      REQUIRE(std::isfinite(v));
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
    }
  }
  // Views of one source differ in pixels.
  const auto& s0 = m.entries.front();
  CHECK(read_frames(m.frame_file(m.find(s0.source_id, View::kFront))).storage() !=
        read_frames(m.frame_file(m.find(s0.source_id, View::kR90))).storage());

  generate_dataset(tiny_config(), b.path());
  CHECK(slurp(a.path() / "manifest.txt") == slurp(b.path() / "manifest.txt"));
  CHECK(slurp(a.path() / "vocab.txt") == slurp(b.path() / "vocab.txt"));
  for (const auto& e : m.entries) {
    REQUIRE(slurp(a.path() / e.frame_path) == slurp(b.path() / e.frame_path));
  }

  const auto reread = read_manifest(a.path() / "manifest.txt");
  CHECK(format_manifest(reread) == format_manifest(m));
  CHECK(reread.config_hash == m.config_hash);
  CHECK(reread.vocab_size == 20);
  CHECK(reread.root == a.path());
}

TEST_CASE("desk-scale source counts") {
  ScratchDir d("desk");
  GenerationConfig c;  // 80 / 10 / 10 sources
  c.height = 16;
  c.width = 16;
  const auto m = generate_dataset(c, d.path());
  CHECK(m.entries.size() == 700);
  validate_manifest(m);
}

TEST_CASE("generation argument errors") {
  ScratchDir d("bad");
  auto c = tiny_config();
  c.dev_sources = 0;
  CHECK_THROWS_AS(generate_dataset(c, d.path()), InvalidArgument);
  c = tiny_config();
  c.min_glosses = 3;
  c.max_glosses = 2;
  CHECK_THROWS_AS(generate_dataset(c, d.path()), InvalidArgument);
  c = tiny_config();
  c.frames_per_gloss = 2;
  CHECK_THROWS_AS(generate_dataset(c, d.path()), InvalidArgument);
  c = tiny_config();
  c.vocab_size = 1;
  CHECK_THROWS_AS(generate_dataset(c, d.path()), InvalidArgument);
  CHECK(tiny_config().hash() != c.hash());
  CHECK(tiny_config().hash() == tiny_config().hash());
}

TEST_CASE("manifest validation") {
  ScratchDir d("val");
  const auto good = generate_dataset(tiny_config(), d.path());

  auto m = good;
  m.entries.erase(m.entries.begin());  // Front view of the first source
  CHECK_THROWS_AS(validate_manifest(m), DataIntegrityError);
  CHECK_THROWS_AS(m.find(good.entries.front().source_id, View::kFront), DataIntegrityError);

  m = good;
  m.entries.push_back(m.entries.front());
  CHECK_THROWS_AS(validate_manifest(m), DataIntegrityError);

  m = good;
  m.entries[1].glosses.push_back(0);
  CHECK_THROWS_AS(validate_manifest(m), DataIntegrityError);

  m = good;
  m.entries[2].frames += 1;
  CHECK_THROWS_AS(validate_manifest(m), DataIntegrityError);

  m = good;
  m.entries[3].split = Split::kTest;
  CHECK_THROWS_AS(validate_manifest(m), DataIntegrityError);

  CHECK_THROWS_AS(parse_manifest("a\tb\tc\n", d.path()), InvalidArgument);
  CHECK_THROWS_AS(read_manifest(d.path() / "missing.txt"), IoError);
}

TEST_CASE("frame file round trip and corruption") {
  ScratchDir d("frames");
  std::mt19937_64 rng(1);
  const auto f = testing::random_tensor<float>({3, 3, 4, 5}, rng, 0, 1);
  write_frames(d.path() / "x.bin", f);
  const auto bytes = slurp(d.path() / "x.bin");
  CHECK(bytes.size() == 16 + f.size() * 4);
  CHECK(static_cast<unsigned char>(bytes[0]) == 3);  // little-endian T
  const auto g = read_frames(d.path() / "x.bin");
  CHECK(g.shape() == f.shape());
  CHECK(g.storage() == f.storage());
  {
    std::ofstream os(d.path() / "cut.bin", std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
  }
  CHECK_THROWS_AS(read_frames(d.path() / "cut.bin"), IoError);
  CHECK_THROWS_AS(read_frames(d.path() / "none.bin"), IoError);
  CHECK_THROWS_AS(write_frames(d.path() / "y.bin", Tensor<float>({2, 2})), InvalidArgument);
}

}  // namespace
}  // namespace canonslr
