import type { EnvInfo, TrajectoryData } from "../api.js";

export interface DriverFrame {
  ego: { x: number; y: number; heading: number };
  other: { x: number; y: number; heading: number } | null;
  /** Ego positions up to this frame, for the trailing path. */
  trail: Array<[number, number]>;
}

/** One frame per stored state; deterministic, so replays are identical. */
export function computeDriverFrames(traj: TrajectoryData): DriverFrame[] {
  const frames: DriverFrame[] = [];
  const trail: Array<[number, number]> = [];
  traj.states.forEach((state, t) => {
    const [x, y, heading] = state;
    if (x === undefined || y === undefined || heading === undefined) {
      throw new Error(`driver state ${t} is malformed`);
    }
    trail.push([x, y]);
    const other = traj.other_states?.[t];
    frames.push({
      ego: { x, y, heading },
      other: other ? { x: other[0]!, y: other[1]!, heading: other[2] ?? 0 } : null,
      trail: [...trail],
    });
  });
  return frames;
}

const VIEW = { width: 220, height: 320, margin: 10 };
const ROAD_HALF_WIDTH = 0.6;

function toCanvas(
  x: number,
  y: number,
  yCenter: number,
): { cx: number; cy: number } {
  // x is lateral (road axis horizontal), y is longitudinal (scrolls upward).
  const cx = VIEW.width / 2 + (x / ROAD_HALF_WIDTH) * (VIEW.width / 2 - VIEW.margin);
  const cy = VIEW.height / 2 - (y - yCenter) * 60;
  return { cx, cy };
}

function drawCar(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  heading: number,
  yCenter: number,
  color: string,
): void {
  const { cx, cy } = toCanvas(x, y, yCenter);
  ctx.save();
  ctx.translate(cx, cy);
  ctx.rotate(-heading);
  ctx.fillStyle = color;
  ctx.fillRect(-7, -12, 14, 24);
  ctx.restore();
}

export function paintDriverFrame(
  ctx: CanvasRenderingContext2D,
  frame: DriverFrame,
  envInfo: EnvInfo,
  color: string,
): void {
  ctx.fillStyle = "#2b2b2b";
  ctx.fillRect(0, 0, VIEW.width, VIEW.height);
  const yCenter = frame.ego.y;
  ctx.strokeStyle = "#888";
  ctx.setLineDash([8, 10]);
  for (const lane of envInfo.lane_centers ?? []) {
    const left = toCanvas(lane - 0.2, 0, 0).cx;
    const right = toCanvas(lane + 0.2, 0, 0).cx;
    for (const cx of [left, right]) {
      ctx.beginPath();
      ctx.moveTo(cx, 0);
      ctx.lineTo(cx, VIEW.height);
      ctx.stroke();
    }
  }
  ctx.setLineDash([]);
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  frame.trail.forEach(([x, y], i) => {
    const { cx, cy } = toCanvas(x, y, yCenter);
    if (i === 0) ctx.moveTo(cx, cy);
    else ctx.lineTo(cx, cy);
  });
  ctx.stroke();
  if (frame.other) {
    drawCar(ctx, frame.other.x, frame.other.y, frame.other.heading, yCenter, "#ddd");
  }
  drawCar(ctx, frame.ego.x, frame.ego.y, frame.ego.heading, yCenter, color);
}

export const DRIVER_VIEW = VIEW;
