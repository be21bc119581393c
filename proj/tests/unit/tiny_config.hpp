#pragma once

#include "agrpose/pipeline/config.hpp"

// A configuration small enough to train in well under a second.
inline agrpose::pipeline::RunConfig tiny_config() {
  agrpose::pipeline::RunConfig c;
  c.coarse.extent = {6000, 6000, 1800};
  c.coarse.dims = {10, 10, 4};
  c.fine.dims = 8;
  c.data.train.count = 4;
  c.data.test_count = 3;
  c.data.train.max_people = 2;
  c.data.train.camera.width = 40;
  c.data.train.camera.height_px = 24;
  c.data.train.camera.focal = {35, 35};
  c.data.train.camera.theta = {0.3, 0.3};
  c.data.train.camera.yaw = {-3, 3};
  c.model.de_channels = 3;
  c.model.de_dilations = {1, 2};
  c.model.ren_channels = 2;
  c.model.pen_channels = 2;
  c.train.epochs = 2;
  c.train.lr = 1e-3;
  c.protocol.train_count = 3;
  c.protocol.test_count = 2;
  c.protocol.epochs = 1;
  c.eval.nms.threshold = 0.05;
  return c;
}
