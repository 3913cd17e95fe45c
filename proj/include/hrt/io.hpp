#pragma once

#include <string>
#include <vector>

#include "hrt/grid.hpp"
#include "hrt/sparse.hpp"
#include "hrt/synth.hpp"

namespace hrt {

// RSG1: magic, u32 n1, u32 n2, f64 o1 d1 o2 d2, float32 samples axis-1 fastest, little endian.
void write_rsg(const std::string& path, const Field2& f);
Field2 read_rsg(const std::string& path);

// Rows are axis-1 samples, columns are traces; optional "#t0=,dt=,x0=,dx=" first line.
Field2 read_csv_gather(const std::string& path);
void write_csv_gather(const std::string& path, const Field2& f);

// 16-bit P5, rows along axis 1, symmetric clip at the given percentile of |data|.
void render_pgm(const Field2& f, const std::string& path, double clip_percentile = 99.0);

// "tau0 q0 amp freq [ricker|gauss]" per line, '#' comments.
std::vector<EventSpec> read_event_spec(const std::string& path);
// "tau q" per line, '#' comments.
Polyline read_mute(const std::string& path);
// Live-trace flags, one 0/1 per line.
std::vector<unsigned char> read_mask(const std::string& path);
void write_mask(const std::string& path, const std::vector<unsigned char>& mask);

}  // namespace hrt
