import type { EnvInfo, TrajectoryData } from "../api.js";

export interface TosserFrame {
  x: number;
  y: number;
  trail: Array<[number, number]>;
}

/** One frame per stored state of the projectile flight. */
export function computeTosserFrames(traj: TrajectoryData): TosserFrame[] {
  const frames: TosserFrame[] = [];
  const trail: Array<[number, number]> = [];
  traj.states.forEach((state, t) => {
    const [x, y] = state;
    if (x === undefined || y === undefined) {
      throw new Error(`tosser state ${t} is malformed`);
    }
    trail.push([x, y]);
    frames.push({ x, y, trail: [...trail] });
  });
  return frames;
}

const VIEW = { width: 320, height: 200, xMax: 10, yMax: 5 };

function toCanvas(x: number, y: number): { cx: number; cy: number } {
  return {
    cx: (x / VIEW.xMax) * (VIEW.width - 20) + 10,
    cy: VIEW.height - 20 - (y / VIEW.yMax) * (VIEW.height - 40),
  };
}

export function paintTosserFrame(
  ctx: CanvasRenderingContext2D,
  frame: TosserFrame,
  envInfo: EnvInfo,
  color: string,
): void {
  ctx.fillStyle = "#10151c";
  ctx.fillRect(0, 0, VIEW.width, VIEW.height);
  ctx.strokeStyle = "#555";
  ctx.beginPath();
  const ground = toCanvas(0, 0).cy;
  ctx.moveTo(0, ground);
  ctx.lineTo(VIEW.width, ground);
  ctx.stroke();
  ctx.strokeStyle = "#c9a227";
  for (const [bx, by] of envInfo.baskets ?? []) {
    const { cx, cy } = toCanvas(bx!, by!);
    ctx.strokeRect(cx - 8, cy - 10, 16, 10);
  }
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  frame.trail.forEach(([x, y], i) => {
    const { cx, cy } = toCanvas(x, y);
    if (i === 0) ctx.moveTo(cx, cy);
    else ctx.lineTo(cx, cy);
  });
  ctx.stroke();
  const { cx, cy } = toCanvas(frame.x, frame.y);
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(cx, cy, 4, 0, 2 * Math.PI);
  ctx.fill();
}

export const TOSSER_VIEW = VIEW;
