#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "mst/scenario.hpp"

namespace mst::test {

inline TopologySpec ring_spec(double l12_m = 79969.5, double l23_m = 50000.0, double l31_m = 50000.0) {
  TopologySpec t;
  t.roadms = {"ROADM1", "ROADM2", "ROADM3"};
  t.switches = {{"SW1", 645}, {"SW2", 645}};
  t.compute = {{"DC1", 32, 65536, "SW1"}, {"DC2", 32, 65536, "SW2"}};
  t.transponders = {{"TP1", "ROADM1", "SW1", "DC1", 2.0, 125.0}, {"TP2", "ROADM2", "SW2", "DC2", 2.0, 125.0}};
  t.links = {{"L12", "ROADM1", "ROADM2", l12_m, kDefaultGroupIndex, 16.0, 0},
             {"L23", "ROADM2", "ROADM3", l23_m, kDefaultGroupIndex, 10.0, 0},
             {"L31", "ROADM3", "ROADM1", l31_m, kDefaultGroupIndex, 10.0, 0}};
  return t;
}

inline NsDescriptor video_ns() {
  NsDescriptor ns;
  ns.endpoints = {"TP1", "TP2"};
  VnfDescriptor csm;
  csm.name = "csm-analytics";
  csm.vcpu = 8;
  csm.mem_mb = 16384;
  csm.target_compute = "DC1";
  VnfDescriptor css;
  css.name = "css-dm";
  css.target_compute = "DC2";
  ns.vnfs = {csm, css};
  return ns;
}

inline ControlTiming no_jitter() {
  ControlTiming t;
  t.jitter = false;
  return t;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string scenario_path(const std::string& name) { return std::string(MST_SCENARIO_DIR) + "/" + name; }

inline Scenario shipped(const std::string& name) { return load_scenario(read_text(scenario_path(name))); }

}  // namespace mst::test
