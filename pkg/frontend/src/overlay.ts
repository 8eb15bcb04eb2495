/** Bounding-box overlay geometry: frame coordinates -> display pixels.
 *
 * Uses the same convention as the detector's box rescaling: each corner is
 * scaled by the axis ratio and rounded half up, which keeps every edge
 * within one pixel of the exact position at any display size.
 */

export interface Size {
  width: number;
  height: number;
}

export interface Rect {
  left: number;
  top: number;
  width: number;
  height: number;
}

export function scaleCorner(value: number, ratio: number): number {
  return Math.round(value * ratio);
}

export function overlayRect(
  box: [number, number, number, number],
  frame: Size,
  display: Size,
): Rect {
  const rx = display.width / frame.width;
  const ry = display.height / frame.height;
  const left = scaleCorner(box[0], rx);
  const top = scaleCorner(box[1], ry);
  return {
    left,
    top,
    width: scaleCorner(box[2], rx) - left,
    height: scaleCorner(box[3], ry) - top,
  };
}
