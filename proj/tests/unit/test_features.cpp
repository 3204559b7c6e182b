// Copyright 2026 The bevocc Authors. All Rights Reserved.
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

#include <cmath>

#include <gtest/gtest.h>

#include "bevocc/error.hpp"
#include "bevocc/features.hpp"
#include "bevocc/rng.hpp"

using namespace bevocc;

TEST(Encoder, ConstantImageHasNoEdges) {
  Image img(16, 12, 3);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) {
      img.at(x, y, 0) = 0.2f;
      img.at(x, y, 1) = 0.5f;
      img.at(x, y, 2) = 0.9f;
    }
  }
  const Image f = encode_features(img);
  ASSERT_EQ(f.channels, kFeatureChannels);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) {
      EXPECT_EQ(f.at(x, y, 0), 0.2f);
      EXPECT_EQ(f.at(x, y, 1), 0.5f);
      EXPECT_EQ(f.at(x, y, 2), 0.9f);
      for (int c = 3; c < 8; ++c) EXPECT_EQ(f.at(x, y, c), 0.0f);
    }
  }
}

TEST(Encoder, VerticalStepEdge) {
  // Black left half, white right half; the step sits between columns 7 and 8.
  Image img(16, 10, 3);
  for (int y = 0; y < 10; ++y) {
    for (int x = 8; x < 16; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 1.0f;
    }
  }
  const Image f = encode_features(img);
  for (int y = 0; y < 10; ++y) {
    for (int x : {7, 8}) {
      // Central difference (1 - 0) / 2 scaled by 2: full response across x.
      EXPECT_NEAR(f.at(x, y, 4), 1.0f, 1e-6);
      EXPECT_EQ(f.at(x, y, 6), 0.0f);
      EXPECT_NEAR(f.at(x, y, 5), std::sqrt(0.5f), 1e-6);
      EXPECT_NEAR(f.at(x, y, 7), std::sqrt(0.5f), 1e-6);
      EXPECT_NEAR(f.at(x, y, 3), 1.0f, 1e-6);
      for (int c = 5; c < 8; ++c) EXPECT_LT(f.at(x, y, c), f.at(x, y, 4));
    }
    EXPECT_EQ(f.at(3, y, 4), 0.0f);
    EXPECT_EQ(f.at(12, y, 4), 0.0f);
  }
}

TEST(Encoder, HorizontalStepEdgeSwapsAxes) {
  Image img(10, 16, 3);
  for (int y = 8; y < 16; ++y) {
    for (int x = 0; x < 10; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 1.0f;
    }
  }
  const Image f = encode_features(img);
  EXPECT_NEAR(f.at(4, 8, 6), 1.0f, 1e-6);
  EXPECT_EQ(f.at(4, 8, 4), 0.0f);
}

TEST(Encoder, OutputsStayInUnitRange) {
  Rng rng(3);
  Image img(40, 30, 3);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(-0.5, 1.5));
  const Image f = encode_features(img);
  EXPECT_EQ(f.width, 40);
  EXPECT_EQ(f.height, 30);
  for (float v : f.data) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Encoder, RejectsSingleChannelInput) {
  EXPECT_THROW(encode_features(Image(4, 4, 1)), InvalidArgument);
}
