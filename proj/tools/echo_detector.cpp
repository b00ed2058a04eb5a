// Reference detector plugin: reads a PNG tile on stdin and reports the whole
// tile as one detection with score 1.0. Test knobs simulate failing plugins.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <iterator>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "roilink/image_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"roilink echo detector plugin"};
  int exit_code = 0;
  int sleep_ms = 0;
  bool silent = false;
  std::vector<std::string> lines;
  app.add_option("--exit", exit_code, "exit status after reading the tile");
  app.add_option("--sleep-ms", sleep_ms, "delay before answering");
  app.add_flag("--silent", silent, "print no detections");
  app.add_option("--emit", lines, "print these lines instead of the tile box");
  CLI11_PARSE(app, argc, argv);

  std::vector<std::uint8_t> png((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  roilink::RgbImage tile;
  try {
    tile = roilink::decode_png(png);
  } catch (const std::exception& e) {
    std::cerr << "echo-detector: " << e.what() << '\n';
    return 2;
  }
  if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
  if (!lines.empty()) {
    for (const auto& l : lines) std::cout << l << '\n';
  } else if (!silent) {
    std::cout << "0 0 " << tile.dims.width << ' ' << tile.dims.height << " 1.0\n";
  }
  return exit_code;
}
