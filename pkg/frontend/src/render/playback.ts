/** Frame-stepping playback loop shared by the animated environment views. */
export class Player {
  private frameIndex = 0;
  private playing = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private frameCount: number,
    private paint: (frameIndex: number) => void,
    private fps = 25,
  ) {}

  get totalFrames(): number {
    return this.frameCount;
  }

  get currentFrame(): number {
    return this.frameIndex;
  }

  get isPlaying(): boolean {
    return this.playing;
  }

  seek(index: number): void {
    this.frameIndex = Math.max(0, Math.min(index, this.frameCount - 1));
    this.paint(this.frameIndex);
  }

  play(): void {
    if (this.playing || this.frameCount === 0) return;
    this.playing = true;
    this.tick();
  }

  pause(): void {
    this.playing = false;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  /** Restart from the first frame; frames are pure, so replays are identical. */
  replay(): void {
    this.pause();
    this.frameIndex = 0;
    this.paint(0);
    this.play();
  }

  private tick = (): void => {
    if (!this.playing) return;
    this.paint(this.frameIndex);
    if (this.frameIndex >= this.frameCount - 1) {
      this.playing = false;
      return;
    }
    this.frameIndex += 1;
    this.timer = setTimeout(this.tick, 1000 / this.fps);
  };
}
