// The six cardinal SOPs behind the preset buttons, standard Stokes
// conventions: linear horizontal/vertical, diagonal/antidiagonal, and the
// two circular handednesses.

import { Vec3 } from "./types.js";

export const PRESETS: ReadonlyArray<{ key: string; label: string; sop: Vec3 }> = [
  { key: "H", label: "H linear", sop: [1, 0, 0] },
  { key: "V", label: "V linear", sop: [-1, 0, 0] },
  { key: "D", label: "Diagonal", sop: [0, 1, 0] },
  { key: "A", label: "Antidiag", sop: [0, -1, 0] },
  { key: "R", label: "R circular", sop: [0, 0, 1] },
  { key: "L", label: "L circular", sop: [0, 0, -1] },
];

export function presetSop(key: string): Vec3 {
  const hit = PRESETS.find((p) => p.key === key);
  if (!hit) throw new Error(`no preset ${key}`);
  return hit.sop;
}
