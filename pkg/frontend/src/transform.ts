// World (x downstream, z up, meters) to screen (px, y down) mapping.
// Uniform scale, so circles stay circles; invertible by construction.

import type { Domain } from "./protocol";

export interface Transform {
  scale: number; // px per meter
  offsetX: number; // px of world x = 0
  offsetY: number; // px of world z = 0
}

export function fitDomain(
  domain: Domain,
  width: number,
  height: number,
  margin = 24,
): Transform {
  const spanX = domain.x_max - domain.x_min;
  const spanZ = domain.z_max - domain.z_min;
  const scale = Math.min(
    (width - 2 * margin) / spanX,
    (height - 2 * margin) / spanZ,
  );
  const centerX = 0.5 * (domain.x_min + domain.x_max);
  const centerZ = 0.5 * (domain.z_min + domain.z_max);
  return {
    scale,
    offsetX: width / 2 - centerX * scale,
    offsetY: height / 2 + centerZ * scale,
  };
}

export function toScreen(
  t: Transform,
  x: number,
  z: number,
): [number, number] {
  return [t.offsetX + x * t.scale, t.offsetY - z * t.scale];
}

export function toWorld(
  t: Transform,
  px: number,
  py: number,
): [number, number] {
  return [(px - t.offsetX) / t.scale, (t.offsetY - py) / t.scale];
}
