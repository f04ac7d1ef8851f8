#include "coopdet/net.hpp"

namespace coopdet {

// Full-scale feature extractor: four pools (K=16), 832 -> 52, ends with a
// plain 3x3x128 conv.
NetworkConfig table1_fec() {
  NetworkConfig cfg;
  cfg.in_channels = 3;
  cfg.layers = {
      conv(3, 24), maxpool2(),
      conv(3, 48), maxpool2(),
      conv(3, 64), conv(3, 32), conv(3, 64), maxpool2(),
      conv(3, 128), conv(3, 64), conv(3, 128), maxpool2(),
      conv(3, 128),
      conv(3, 128, false, false),
  };
  return cfg;
}

// Desk-scale variant: two pools (K=4), widths {8,16,16}.
NetworkConfig tiny_fec() {
  NetworkConfig cfg;
  cfg.in_channels = 3;
  cfg.layers = {
      conv(3, 8), maxpool2(),
      conv(3, 16), maxpool2(),
      conv(3, 16, false, false),
  };
  return cfg;
}

NetworkConfig encoder(int c_t, int width) {
  NetworkConfig cfg;
  cfg.in_channels = width;
  cfg.layers = {conv(1, width), conv(1, width), conv(1, c_t)};
  return cfg;
}

NetworkConfig decoder(int width) {
  // in_channels is patched to the transmit channel count at bank build time.
  NetworkConfig cfg;
  cfg.in_channels = width;
  cfg.layers = {conv(1, width), conv(1, width), conv(1, width)};
  return cfg;
}

NetworkConfig fscod_last_layer(int c_t, int in_channels) {
  NetworkConfig cfg;
  cfg.in_channels = in_channels;
  cfg.layers = {conv(3, c_t, false, false)};
  return cfg;
}

NetworkConfig detector_head(int out_channels, int in_channels) {
  NetworkConfig cfg;
  cfg.in_channels = in_channels;
  cfg.layers = {
      conv(1, 128), conv(3, 256), conv(1, 512),  conv(1, 1024), conv(3, 2048),
      conv(1, 1024), conv(1, 2048), conv(3, 1024),
      conv(1, out_channels, false, false),
  };
  return cfg;
}

NetworkConfig tiny_head(int out_channels, int in_channels) {
  NetworkConfig cfg;
  cfg.in_channels = in_channels;
  cfg.layers = {conv(1, 16), conv(3, 32), conv(1, out_channels, false, false)};
  return cfg;
}

}  // namespace coopdet
