"""Predict and measure where single- and multi-device upsampling run out of memory.

The per-device footprint of upsampling a W x H RGB image by s is its input
slice plus its output slice.  With the capacity set to exactly what one device
needs at scale 23, the script prints predicted vs observed first-failing scale
for 1..N devices.
"""

import argparse

from gigaapi.api import GigaConfig, GigaGpu
from gigaapi.bench import crossover_capacity, predict_first_oom
from gigaapi.errors import OutOfDeviceMemory
from gigaapi.images import synthesize_image


def observed_first_oom(img, capacity, devices, scales):
    with GigaGpu(GigaConfig(device_count=devices, memory_capacity=capacity)) as gpu:
        for s in scales:
            try:
                gpu.upsample_image(img, s)
            except OutOfDeviceMemory:
                return s
    return None


def main() -> None:
    ap = argparse.ArgumentParser(description="upsample OOM crossover table")
    ap.add_argument("--base", default="64x36", help="base image WxH")
    ap.add_argument("--max-devices", type=int, default=4)
    ap.add_argument("--max-scale", type=int, default=60)
    args = ap.parse_args()

    w, h = (int(v) for v in args.base.split("x"))
    img = synthesize_image(w, h, 0)
    cap = crossover_capacity(w, h)
    scales = range(2, args.max_scale + 1)
    print(f"base {w}x{h}, per-device capacity {cap} bytes")
    print(f"{'devices':>7} {'predicted':>9} {'observed':>8}")
    for n in range(1, args.max_devices + 1):
        pred = predict_first_oom(w, h, cap, n, scales)
        obs = observed_first_oom(img, cap, n, scales)
        print(f"{n:>7} {str(pred):>9} {str(obs):>8}")


if __name__ == "__main__":
    main()
